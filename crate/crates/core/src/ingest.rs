//! CSV ingestion and serialization.
//!
//! Schemas (UTF-8, comma-delimited, header row required, `.` decimals):
//!
//! | file              | header                                  |
//! |-------------------|-----------------------------------------|
//! | consumption       | `timestamp,mwh`                         |
//! | weather           | `timestamp,station_id,temp_c`           |
//! | capacity factors  | `timestamp,country,wind_cf,solar_cf`    |
//! | macro             | `year,gdp,pop`                          |
//! | holidays          | `date`                                  |
//!
//! Timestamps are ISO-8601 and normalised to UTC; a missing offset means UTC.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::features::{HolidayCalendar, StationTemperature};
use crate::series::{year_start, HourlySeries, Unit};

pub const CONSUMPTION_HEADER: [&str; 2] = ["timestamp", "mwh"];
pub const WEATHER_HEADER: [&str; 3] = ["timestamp", "station_id", "temp_c"];
pub const CAPACITY_FACTOR_HEADER: [&str; 4] = ["timestamp", "country", "wind_cf", "solar_cf"];
pub const MACRO_HEADER: [&str; 3] = ["year", "gdp", "pop"];
pub const HOLIDAY_HEADER: [&str; 1] = ["date"];

/// How missing hours are handled on ingestion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPolicy {
    /// Longest run of consecutive missing hours that is linearly interpolated.
    pub max_interpolated_run: usize,
    /// Largest tolerated share of missing hours.
    pub max_missing_fraction: f64,
}

impl Default for GapPolicy {
    fn default() -> Self {
        Self {
            max_interpolated_run: 6,
            max_missing_fraction: 0.01,
        }
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let found: Vec<&str> = found.iter().collect();
    if found != header {
        return Err(parse_err(
            path,
            1,
            format!("expected header {:?}, found {:?}", header.join(","), found.join(",")),
        ));
    }
    Ok(rdr)
}

fn records(
    path: &Path,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord)>>> {
    let rdr = open_csv(path, header)?;
    let path = path.to_path_buf();
    let width = header.len();
    Ok(rdr.into_records().map(move |r| {
        let rec = r.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(&path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(parse_err(&path, line, format!("expected {width} fields, got {}", rec.len())));
        }
        Ok((line, rec))
    }))
}

fn field_ts(path: &Path, line: u64, s: &str) -> Result<NaiveDateTime> {
    let ts = parse_timestamp(s).ok_or_else(|| parse_err(path, line, format!("bad timestamp {s:?}")))?;
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(parse_err(path, line, format!("timestamp {s} is not on a whole hour")));
    }
    Ok(ts)
}

fn field_f64(path: &Path, line: u64, name: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad {name} value {s:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{name} value {s:?} is not finite")));
    }
    Ok(v)
}

/// Assembles strictly increasing hourly observations into a contiguous
/// series, interpolating short gaps.
pub fn assemble_hourly(
    points: &[(u64, NaiveDateTime, f64)],
    path: &Path,
    unit: Unit,
    policy: GapPolicy,
) -> Result<HourlySeries> {
    let Some(&(_, start, _)) = points.first() else {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    };
    let mut values = Vec::with_capacity(points.len());
    let mut missing = 0usize;
    let mut prev: Option<(NaiveDateTime, f64)> = None;
    for &(line, ts, v) in points {
        if let Some((pts, pv)) = prev {
            if ts == pts {
                return Err(parse_err(path, line, format!("duplicate timestamp {}", format_timestamp(ts))));
            }
            if ts < pts {
                return Err(parse_err(
                    path,
                    line,
                    format!("timestamp {} is earlier than the previous row", format_timestamp(ts)),
                ));
            }
            let gap = ((ts - pts).num_hours() - 1) as usize;
            if gap > 0 {
                if gap > policy.max_interpolated_run {
                    return Err(Error::Data(format!(
                        "{}:{line}: {gap} consecutive missing hours before {} exceed the limit of {}",
                        path.display(),
                        format_timestamp(ts),
                        policy.max_interpolated_run
                    )));
                }
                log::warn!(
                    "{}: interpolating {gap} missing hour(s) before {}",
                    path.display(),
                    format_timestamp(ts)
                );
                for k in 1..=gap {
                    let w = k as f64 / (gap + 1) as f64;
                    values.push(pv + (v - pv) * w);
                }
                missing += gap;
            }
        }
        values.push(v);
        prev = Some((ts, v));
    }
    let fraction = missing as f64 / values.len() as f64;
    if fraction > policy.max_missing_fraction {
        return Err(Error::Data(format!(
            "{}: {missing} of {} hours missing ({:.2}%), limit {:.2}%",
            path.display(),
            values.len(),
            100.0 * fraction,
            100.0 * policy.max_missing_fraction
        )));
    }
    HourlySeries::new(start, values, unit)
}

pub fn load_consumption_csv(path: &Path) -> Result<HourlySeries> {
    load_consumption_csv_with(path, GapPolicy::default())
}

pub fn load_consumption_csv_with(path: &Path, policy: GapPolicy) -> Result<HourlySeries> {
    let mut points = Vec::new();
    for r in records(path, &CONSUMPTION_HEADER)? {
        let (line, rec) = r?;
        let ts = field_ts(path, line, &rec[0])?;
        let v = field_f64(path, line, "mwh", &rec[1])?;
        points.push((line, ts, v));
    }
    assemble_hourly(&points, path, Unit::Mwh, policy)
}

/// Station series in order of first appearance in the file.
pub fn load_weather_csv(path: &Path) -> Result<Vec<StationTemperature>> {
    let mut order: Vec<String> = Vec::new();
    let mut points: BTreeMap<String, Vec<(u64, NaiveDateTime, f64)>> = BTreeMap::new();
    for r in records(path, &WEATHER_HEADER)? {
        let (line, rec) = r?;
        let ts = field_ts(path, line, &rec[0])?;
        let id = rec[1].trim().to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty station_id"));
        }
        let v = field_f64(path, line, "temp_c", &rec[2])?;
        if !points.contains_key(&id) {
            order.push(id.clone());
        }
        points.entry(id).or_default().push((line, ts, v));
    }
    if order.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    order
        .into_iter()
        .map(|id| {
            let s = assemble_hourly(&points[&id], path, Unit::Celsius, GapPolicy::default())?;
            StationTemperature::new(id, s)
        })
        .collect()
}

/// Wind and solar capacity factors per country.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityFactors {
    pub wind: HourlySeries,
    pub solar: HourlySeries,
}

pub fn load_capacity_factors_csv(path: &Path) -> Result<BTreeMap<String, CapacityFactors>> {
    type Points = Vec<(u64, NaiveDateTime, f64)>;
    let mut by_country: BTreeMap<String, (Points, Points)> = BTreeMap::new();
    for r in records(path, &CAPACITY_FACTOR_HEADER)? {
        let (line, rec) = r?;
        let ts = field_ts(path, line, &rec[0])?;
        let country = rec[1].trim().to_string();
        let wind = field_f64(path, line, "wind_cf", &rec[2])?;
        let solar = field_f64(path, line, "solar_cf", &rec[3])?;
        for (name, v) in [("wind_cf", wind), ("solar_cf", solar)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Data(format!(
                    "{}:{line}: {name} {v} outside [0, 1]",
                    path.display()
                )));
            }
        }
        let e = by_country.entry(country).or_default();
        e.0.push((line, ts, wind));
        e.1.push((line, ts, solar));
    }
    if by_country.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    by_country
        .into_iter()
        .map(|(c, (w, s))| {
            let wind = assemble_hourly(&w, path, Unit::CapacityFactor, GapPolicy::default())?;
            let solar = assemble_hourly(&s, path, Unit::CapacityFactor, GapPolicy::default())?;
            Ok((c, CapacityFactors { wind, solar }))
        })
        .collect()
}

/// Hourly GDP and population interpolated between annual anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSeries {
    /// `(year, gdp, pop)` anchored at 1 January 00:00.
    pub anchors: Vec<(i32, f64, f64)>,
    pub gdp: HourlySeries,
    pub pop: HourlySeries,
}

impl MacroSeries {
    /// Linear interpolation between consecutive anchors; the series runs from
    /// the first anchor to the last anchor inclusive.
    pub fn from_anchors(mut anchors: Vec<(i32, f64, f64)>) -> Result<Self> {
        anchors.sort_by_key(|a| a.0);
        if anchors.len() < 2 {
            return Err(Error::Data("macro data needs at least two years".into()));
        }
        for w in anchors.windows(2) {
            if w[1].0 != w[0].0 + 1 {
                return Err(Error::Data(format!(
                    "macro years must be consecutive, found {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(y, g, p) in &anchors {
            if !(g > 0.0 && p > 0.0) {
                return Err(Error::Domain(format!(
                    "macro values for {y} must be positive (gdp {g}, pop {p})"
                )));
            }
        }
        let start = year_start(anchors[0].0);
        let mut gdp = Vec::new();
        let mut pop = Vec::new();
        for w in anchors.windows(2) {
            let (y0, g0, p0) = w[0];
            let (y1, g1, p1) = w[1];
            let hours = (year_start(y1) - year_start(y0)).num_hours();
            for h in 0..hours {
                let f = h as f64 / hours as f64;
                gdp.push(g0 + (g1 - g0) * f);
                pop.push(p0 + (p1 - p0) * f);
            }
        }
        let (_, gl, pl) = *anchors.last().expect("two anchors");
        gdp.push(gl);
        pop.push(pl);
        Ok(Self {
            gdp: HourlySeries::new(start, gdp, Unit::Gdp)?,
            pop: HourlySeries::new(start, pop, Unit::Persons)?,
            anchors,
        })
    }

    /// GDP and population on `[from, from + len)` hours.
    pub fn window(&self, from: NaiveDateTime, len: usize) -> Result<(HourlySeries, HourlySeries)> {
        match (self.gdp.window(from, len), self.pop.window(from, len)) {
            (Some(g), Some(p)) => Ok((g, p)),
            _ => Err(Error::Data(format!(
                "macro data ({}..={}) does not cover {} hours from {}",
                self.anchors[0].0,
                self.anchors.last().map(|a| a.0).unwrap_or_default(),
                len,
                from
            ))),
        }
    }
}

pub fn load_macro(path: &Path) -> Result<MacroSeries> {
    let mut anchors = Vec::new();
    for r in records(path, &MACRO_HEADER)? {
        let (line, rec) = r?;
        let year: i32 = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad year {:?}", &rec[0])))?;
        let gdp = field_f64(path, line, "gdp", &rec[1])?;
        let pop = field_f64(path, line, "pop", &rec[2])?;
        if anchors.iter().any(|a: &(i32, f64, f64)| a.0 == year) {
            return Err(parse_err(path, line, format!("duplicate year {year}")));
        }
        anchors.push((year, gdp, pop));
    }
    MacroSeries::from_anchors(anchors)
}

pub fn load_holidays(path: &Path) -> Result<HolidayCalendar> {
    let mut dates = Vec::new();
    for r in records(path, &HOLIDAY_HEADER)? {
        let (line, rec) = r?;
        let d = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|_| parse_err(path, line, format!("bad date {:?}", &rec[0])))?;
        dates.push(d);
    }
    Ok(HolidayCalendar::new(dates))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn werr(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e)
}

/// Writes `timestamp,mwh`; values use the shortest round-trip representation.
pub fn write_consumption_csv(path: &Path, series: &HourlySeries) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", CONSUMPTION_HEADER.join(",")).map_err(werr(path))?;
    for (ts, v) in series.timestamps().zip(series.values()) {
        writeln!(w, "{},{v}", format_timestamp(ts)).map_err(werr(path))?;
    }
    finish(w, path)
}

pub fn write_weather_csv(path: &Path, stations: &[StationTemperature]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", WEATHER_HEADER.join(",")).map_err(werr(path))?;
    if let Some(first) = stations.first() {
        for i in 0..first.series.len() {
            let ts = format_timestamp(first.series.timestamp(i));
            for st in stations {
                writeln!(w, "{ts},{},{}", st.station_id, st.series.values()[i]).map_err(werr(path))?;
            }
        }
    }
    finish(w, path)
}

pub fn write_capacity_factors_csv(path: &Path, cfs: &BTreeMap<String, CapacityFactors>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", CAPACITY_FACTOR_HEADER.join(",")).map_err(werr(path))?;
    for (country, cf) in cfs {
        for i in 0..cf.wind.len() {
            writeln!(
                w,
                "{},{country},{},{}",
                format_timestamp(cf.wind.timestamp(i)),
                cf.wind.values()[i],
                cf.solar.values()[i]
            )
            .map_err(werr(path))?;
        }
    }
    finish(w, path)
}

pub fn write_macro_csv(path: &Path, anchors: &[(i32, f64, f64)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", MACRO_HEADER.join(",")).map_err(werr(path))?;
    for (y, g, p) in anchors {
        writeln!(w, "{y},{g},{p}").map_err(werr(path))?;
    }
    finish(w, path)
}

pub fn write_holidays_csv(path: &Path, calendar: &HolidayCalendar) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", HOLIDAY_HEADER.join(",")).map_err(werr(path))?;
    for d in calendar.dates() {
        writeln!(w, "{}", d.format("%Y-%m-%d")).map_err(werr(path))?;
    }
    finish(w, path)
}

/// Common hourly span `[start, start + len)` of several series, if any.
pub fn common_span<'a>(series: impl IntoIterator<Item = &'a HourlySeries>) -> Option<(NaiveDateTime, usize)> {
    let mut start: Option<NaiveDateTime> = None;
    let mut end: Option<NaiveDateTime> = None;
    for s in series {
        let e = s.start() + Duration::hours(s.len() as i64);
        start = Some(start.map_or(s.start(), |v| v.max(s.start())));
        end = Some(end.map_or(e, |v| v.min(e)));
    }
    let (start, end) = (start?, end?);
    (end > start).then(|| (start, (end - start).num_hours() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_row_consumption() {
        let f = file("timestamp,mwh\n2015-01-01T00:00:00Z,100.5\n2015-01-01T01:00:00Z,101\n");
        let s = load_consumption_csv(f.path()).unwrap();
        assert_eq!(s.values(), &[100.5, 101.0]);
        assert_eq!(format_timestamp(s.start()), "2015-01-01T00:00:00Z");
    }

    #[test]
    fn offsets_are_normalised_to_utc() {
        let f = file("timestamp,mwh\n2015-01-01T01:00:00+01:00,1\n2015-01-01T01:00:00Z,2\n");
        let s = load_consumption_csv(f.path()).unwrap();
        assert_eq!(format_timestamp(s.start()), "2015-01-01T00:00:00Z");
    }

    #[test]
    fn duplicate_timestamp_is_parse_error_with_line() {
        let f = file("timestamp,mwh\n2015-01-01T00:00:00Z,1\n2015-01-01T00:00:00Z,2\n");
        match load_consumption_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let f = file("timestamp,mwh\n2015-01-01T00:00:00Z,abc\n");
        assert!(matches!(load_consumption_csv(f.path()), Err(Error::Parse { line: 2, .. })));
        let f = file("time,mwh\n2015-01-01T00:00:00Z,1\n");
        assert!(matches!(load_consumption_csv(f.path()), Err(Error::Parse { line: 1, .. })));
        let f = file("timestamp,mwh\n2015-01-01T00:30:00Z,1\n");
        assert!(matches!(load_consumption_csv(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn single_missing_hour_is_midpoint() {
        let mut rows = String::from("timestamp,mwh\n");
        for h in 0..200 {
            if h == 100 {
                continue;
            }
            let ts = year_start(2015) + Duration::hours(h);
            rows.push_str(&format!("{},{}\n", format_timestamp(ts), 1000 + 2 * h));
        }
        let s = load_consumption_csv(file(&rows).path()).unwrap();
        assert_eq!(s.len(), 200);
        assert_eq!(s.values()[100], (s.values()[99] + s.values()[101]) / 2.0);
    }

    #[test]
    fn long_gaps_and_too_many_gaps_are_data_errors() {
        let mut rows = String::from("timestamp,mwh\n");
        for h in [0, 1, 9] {
            let ts = year_start(2015) + Duration::hours(h);
            rows.push_str(&format!("{},1\n", format_timestamp(ts)));
        }
        assert!(matches!(load_consumption_csv(file(&rows).path()), Err(Error::Data(_))));

        let mut rows = String::from("timestamp,mwh\n");
        for h in (0..50).filter(|h| h % 10 != 5) {
            let ts = year_start(2015) + Duration::hours(h);
            rows.push_str(&format!("{},1\n", format_timestamp(ts)));
        }
        assert!(matches!(load_consumption_csv(file(&rows).path()), Err(Error::Data(_))));
    }

    #[test]
    fn weather_long_format_keeps_file_order() {
        let f = file(
            "timestamp,station_id,temp_c\n\
             2015-01-01T00:00:00Z,oslo,-3.5\n\
             2015-01-01T00:00:00Z,bergen,2\n\
             2015-01-01T01:00:00Z,oslo,-4\n\
             2015-01-01T01:00:00Z,bergen,1.5\n",
        );
        let st = load_weather_csv(f.path()).unwrap();
        assert_eq!(st[0].station_id, "oslo");
        assert_eq!(st[1].series.values(), &[2.0, 1.5]);
    }

    #[test]
    fn capacity_factors_are_range_checked() {
        let f = file("timestamp,country,wind_cf,solar_cf\n2015-01-01T00:00:00Z,NO,0.4,0\n");
        let cf = load_capacity_factors_csv(f.path()).unwrap();
        assert_eq!(cf["NO"].wind.values(), &[0.4]);
        let f = file("timestamp,country,wind_cf,solar_cf\n2015-01-01T00:00:00Z,NO,1.4,0\n");
        assert!(matches!(load_capacity_factors_csv(f.path()), Err(Error::Data(_))));
    }

    #[test]
    fn macro_interpolation() {
        let f = file("year,gdp,pop\n2015,100,5\n2016,200,5\n");
        let m = load_macro(f.path()).unwrap();
        assert_eq!(m.gdp.len(), 8760 + 1);
        assert_eq!(m.gdp.values()[4380], 150.0);
        assert!(m.pop.values().iter().all(|&p| p == 5.0));
        assert_eq!(m.gdp.values()[0], 100.0);
        assert_eq!(m.gdp.values()[8760], 200.0);

        let f = file("year,gdp,pop\n2015,100,5\n2016,-1,5\n");
        assert!(matches!(load_macro(f.path()), Err(Error::Domain(_))));
        let f = file("year,gdp,pop\n2015,100,5\n");
        assert!(load_macro(f.path()).is_err());
    }

    #[test]
    fn holidays() {
        let f = file("date\n2015-12-25\n2015-05-17\n");
        let h = load_holidays(f.path()).unwrap();
        assert!(h.contains(NaiveDate::from_ymd_opt(2015, 5, 17).unwrap()));
        assert_eq!(h.len(), 2);
    }
}
