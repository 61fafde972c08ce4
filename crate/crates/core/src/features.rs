//! Regression design matrix for the log-linear consumption model.
//!
//! Column layout (55 columns, fixed order):
//!
//! | columns            | count | meaning                                   |
//! |--------------------|-------|-------------------------------------------|
//! | `intercept`        | 1     | constant 1                                |
//! | `ln_gdp`, `ln_pop` | 2     | natural logs of the macro drivers         |
//! | `hdh_1..hdh_5`     | 5     | heating degree hours per station          |
//! | `cdh_1..cdh_5`     | 5     | cooling degree hours per station          |
//! | `hour_1..hour_23`  | 23    | hour-of-day dummies, hour 0 is baseline   |
//! | `month_2..month_12`| 11    | month dummies, January is baseline        |
//! | `weekday_1..6`     | 6     | Tuesday..Sunday, Monday is baseline       |
//! | `holiday`          | 1     | national holiday indicator                |
//! | `trend`            | 1     | hours elapsed since the trend origin      |
//!
//! Station `i` in the input slice feeds `hdh_{i+1}` and `cdh_{i+1}`.

use std::collections::BTreeSet;
use std::ops::Range;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::{HourlySeries, Unit};

/// Temperature below which heating demand accrues, °C.
pub const HDH_CUTOFF_C: f64 = 17.0;
/// Temperature above which cooling demand accrues, °C.
pub const CDH_CUTOFF_C: f64 = 22.0;
pub const STATIONS_PER_COUNTRY: usize = 5;
pub const COLUMN_COUNT: usize = 55;

pub fn heating_degree_hours(temp_c: f64) -> Result<f64> {
    if !temp_c.is_finite() {
        return Err(Error::Input(format!("temperature {temp_c} is not finite")));
    }
    Ok((HDH_CUTOFF_C - temp_c).max(0.0))
}

pub fn cooling_degree_hours(temp_c: f64) -> Result<f64> {
    if !temp_c.is_finite() {
        return Err(Error::Input(format!("temperature {temp_c} is not finite")));
    }
    Ok((temp_c - CDH_CUTOFF_C).max(0.0))
}

/// Hourly temperatures at one weather station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationTemperature {
    pub station_id: String,
    pub series: HourlySeries,
}

impl StationTemperature {
    pub fn new(station_id: impl Into<String>, series: HourlySeries) -> Result<Self> {
        let station_id = station_id.into();
        if series.unit() != Unit::Celsius {
            return Err(Error::Contract(format!(
                "station {station_id}: expected °C series, got {}",
                series.unit()
            )));
        }
        if let Some(i) = series.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "station {station_id}: non-finite temperature at {}",
                series.timestamp(i)
            )));
        }
        Ok(Self { station_id, series })
    }
}

/// Set of national holiday dates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HolidayCalendar {
    dates: BTreeSet<NaiveDate>,
}

impl HolidayCalendar {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self {
            dates: dates.into_iter().collect(),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    pub fn dates(&self) -> impl Iterator<Item = &NaiveDate> {
        self.dates.iter()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Regressor groups used for effect sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColumnGroup {
    Intercept,
    Gdp,
    Population,
    Hdh,
    Cdh,
    Hour,
    Month,
    Weekday,
    Holiday,
    Trend,
}

impl ColumnGroup {
    /// Every group except the intercept, in schema order.
    pub const REGRESSORS: [ColumnGroup; 9] = [
        ColumnGroup::Gdp,
        ColumnGroup::Population,
        ColumnGroup::Hdh,
        ColumnGroup::Cdh,
        ColumnGroup::Hour,
        ColumnGroup::Month,
        ColumnGroup::Weekday,
        ColumnGroup::Holiday,
        ColumnGroup::Trend,
    ];

    pub fn of_column(name: &str) -> Option<ColumnGroup> {
        let group = match name {
            "intercept" => ColumnGroup::Intercept,
            "ln_gdp" => ColumnGroup::Gdp,
            "ln_pop" => ColumnGroup::Population,
            "holiday" => ColumnGroup::Holiday,
            "trend" => ColumnGroup::Trend,
            n if n.starts_with("hdh_") => ColumnGroup::Hdh,
            n if n.starts_with("cdh_") => ColumnGroup::Cdh,
            n if n.starts_with("hour_") => ColumnGroup::Hour,
            n if n.starts_with("month_") => ColumnGroup::Month,
            n if n.starts_with("weekday_") => ColumnGroup::Weekday,
            _ => return None,
        };
        Some(group)
    }

    pub fn name(self) -> &'static str {
        match self {
            ColumnGroup::Intercept => "intercept",
            ColumnGroup::Gdp => "gdp",
            ColumnGroup::Population => "population",
            ColumnGroup::Hdh => "hdh",
            ColumnGroup::Cdh => "cdh",
            ColumnGroup::Hour => "hour",
            ColumnGroup::Month => "month",
            ColumnGroup::Weekday => "weekday",
            ColumnGroup::Holiday => "holiday",
            ColumnGroup::Trend => "trend",
        }
    }
}

/// Column names of the standard schema, in order.
pub fn standard_schema() -> Vec<String> {
    let mut cols = vec!["intercept".to_string(), "ln_gdp".into(), "ln_pop".into()];
    cols.extend((1..=STATIONS_PER_COUNTRY).map(|i| format!("hdh_{i}")));
    cols.extend((1..=STATIONS_PER_COUNTRY).map(|i| format!("cdh_{i}")));
    cols.extend((1..=23).map(|h| format!("hour_{h}")));
    cols.extend((2..=12).map(|m| format!("month_{m}")));
    cols.extend((1..=6).map(|d| format!("weekday_{d}")));
    cols.push("holiday".into());
    cols.push("trend".into());
    debug_assert_eq!(cols.len(), COLUMN_COUNT);
    cols
}

/// Names of the heating-degree-hour columns in the standard schema.
pub fn hdh_columns() -> Vec<String> {
    (1..=STATIONS_PER_COUNTRY).map(|i| format!("hdh_{i}")).collect()
}

/// Design matrix: one row per hour of a contiguous grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    schema: Vec<String>,
    data: DMatrix<f64>,
    start: NaiveDateTime,
    trend_origin: NaiveDateTime,
}

impl FeatureMatrix {
    /// Assembles a matrix from raw parts; rows start at `start` and advance hourly.
    pub fn from_parts(
        schema: Vec<String>,
        data: DMatrix<f64>,
        start: NaiveDateTime,
        trend_origin: NaiveDateTime,
    ) -> Result<Self> {
        if schema.len() != data.ncols() {
            return Err(Error::Contract(format!(
                "schema has {} names but matrix has {} columns",
                schema.len(),
                data.ncols()
            )));
        }
        Ok(Self {
            schema,
            data,
            start,
            trend_origin,
        })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn trend_origin(&self) -> NaiveDateTime {
        self.trend_origin
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c == name)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name)
            .map(|j| self.data.column(j).iter().copied().collect())
    }

    /// Contiguous block of rows.
    pub fn rows(&self, range: Range<usize>) -> FeatureMatrix {
        let n = range.len();
        FeatureMatrix {
            schema: self.schema.clone(),
            data: self.data.rows(range.start, n).into_owned(),
            start: self.start + Duration::hours(range.start as i64),
            trend_origin: self.trend_origin,
        }
    }

    /// Copy without the named columns.
    pub fn without_columns(&self, drop: &[usize]) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.ncols()).filter(|j| !drop.contains(j)).collect();
        let data = self.data.select_columns(keep.iter());
        FeatureMatrix {
            schema: keep.iter().map(|&j| self.schema[j].clone()).collect(),
            data,
            start: self.start,
            trend_origin: self.trend_origin,
        }
    }
}

/// Builds the 55-column design matrix on the common grid of all inputs.
///
/// `trend_origin` is the timestamp whose trend value is zero; calibration
/// uses the first training hour and projections reuse the model's origin.
pub fn build_design_matrix(
    stations: &[StationTemperature],
    gdp: &HourlySeries,
    pop: &HourlySeries,
    calendar: &HolidayCalendar,
    trend_origin: NaiveDateTime,
) -> Result<FeatureMatrix> {
    if stations.len() != STATIONS_PER_COUNTRY {
        return Err(Error::Contract(format!(
            "expected {STATIONS_PER_COUNTRY} weather stations, got {}",
            stations.len()
        )));
    }
    let grid = &stations[0].series;
    for s in &stations[1..] {
        s.series
            .ensure_same_grid(grid, &format!("station {}", s.station_id))?;
    }
    gdp.ensure_same_grid(grid, "gdp")?;
    pop.ensure_same_grid(grid, "pop")?;
    for (name, series) in [("gdp", gdp), ("pop", pop)] {
        if let Some(i) = series.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "{name} must be positive, got {} at {}",
                series.values()[i],
                series.timestamp(i)
            )));
        }
    }

    let n = grid.len();
    let mut x = DMatrix::<f64>::zeros(n, COLUMN_COUNT);
    const LN_GDP: usize = 1;
    const LN_POP: usize = 2;
    const HDH0: usize = 3;
    const CDH0: usize = HDH0 + STATIONS_PER_COUNTRY;
    const HOUR0: usize = CDH0 + STATIONS_PER_COUNTRY; // hour_1
    const MONTH0: usize = HOUR0 + 23; // month_2
    const WEEKDAY0: usize = MONTH0 + 11; // weekday_1
    const HOLIDAY: usize = WEEKDAY0 + 6;
    const TREND: usize = HOLIDAY + 1;

    for i in 0..n {
        let ts = grid.timestamp(i);
        x[(i, 0)] = 1.0;
        x[(i, LN_GDP)] = gdp.values()[i].ln();
        x[(i, LN_POP)] = pop.values()[i].ln();
        for (k, st) in stations.iter().enumerate() {
            let t = st.series.values()[i];
            x[(i, HDH0 + k)] = heating_degree_hours(t)?;
            x[(i, CDH0 + k)] = cooling_degree_hours(t)?;
        }
        let hour = ts.hour() as usize;
        if hour > 0 {
            x[(i, HOUR0 + hour - 1)] = 1.0;
        }
        let month = ts.month() as usize;
        if month > 1 {
            x[(i, MONTH0 + month - 2)] = 1.0;
        }
        let weekday = ts.weekday().num_days_from_monday() as usize;
        if weekday > 0 {
            x[(i, WEEKDAY0 + weekday - 1)] = 1.0;
        }
        if calendar.contains(ts.date()) {
            x[(i, HOLIDAY)] = 1.0;
        }
        x[(i, TREND)] = (ts - trend_origin).num_hours() as f64;
    }

    FeatureMatrix::from_parts(standard_schema(), x, grid.start(), trend_origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ts(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(h, 0, 0)
            .unwrap()
    }

    fn inputs(start: NaiveDateTime, len: usize) -> (Vec<StationTemperature>, HourlySeries, HourlySeries) {
        let stations = (0..5)
            .map(|k| {
                let vals = (0..len).map(|i| -5.0 + (i as f64) * 0.7 + k as f64 * 3.0).collect();
                StationTemperature::new(
                    format!("st{k}"),
                    HourlySeries::new(start, vals, Unit::Celsius).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let gdp = HourlySeries::constant(start, len, 250.0, Unit::Gdp).unwrap();
        let pop = HourlySeries::constant(start, len, 5.0e6, Unit::Persons).unwrap();
        (stations, gdp, pop)
    }

    #[test]
    fn degree_hour_examples() {
        assert_eq!(heating_degree_hours(17.0).unwrap(), 0.0);
        assert_eq!(heating_degree_hours(7.0).unwrap(), 10.0);
        assert_eq!(heating_degree_hours(25.0).unwrap(), 0.0);
        assert_eq!(cooling_degree_hours(22.0).unwrap(), 0.0);
        assert_eq!(cooling_degree_hours(25.0).unwrap(), 3.0);
        assert_eq!(cooling_degree_hours(10.0).unwrap(), 0.0);
        assert!(heating_degree_hours(f64::NAN).is_err());
        assert!(cooling_degree_hours(f64::INFINITY).is_err());
    }

    #[test]
    fn schema_shape() {
        let s = standard_schema();
        assert_eq!(s.len(), 55);
        assert_eq!(s.len() - 1, 54);
        assert_eq!(s.iter().filter(|c| c.starts_with("hdh_")).count(), 5);
        assert_eq!(s.iter().filter(|c| c.starts_with("cdh_")).count(), 5);
        for c in &s {
            assert!(ColumnGroup::of_column(c).is_some(), "{c}");
        }
    }

    #[test]
    fn baseline_row_monday_midnight_january() {
        // 2018-01-01 was a Monday.
        let start = ts(2018, 1, 1, 0);
        let (stations, gdp, pop) = inputs(start, 30);
        let x = build_design_matrix(&stations, &gdp, &pop, &HolidayCalendar::default(), start)
            .unwrap();
        let row = x.row(0);
        assert_eq!(row[0], 1.0);
        for (j, name) in x.schema().iter().enumerate() {
            if name.starts_with("hour_")
                || name.starts_with("month_")
                || name.starts_with("weekday_")
                || name == "holiday"
            {
                assert_eq!(row[j], 0.0, "{name}");
            }
        }
        assert_eq!(row[x.column_index("trend").unwrap()], 0.0);
        // 25 hours in: Tuesday 01:00, trend 25
        let row = x.row(25);
        assert_eq!(row[x.column_index("hour_1").unwrap()], 1.0);
        assert_eq!(row[x.column_index("weekday_1").unwrap()], 1.0);
        assert_eq!(row[x.column_index("trend").unwrap()], 25.0);
        assert!((row[1] - 250.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn holiday_flag_and_month() {
        let start = ts(2018, 1, 31, 22);
        let (stations, gdp, pop) = inputs(start, 6);
        let cal = HolidayCalendar::new([NaiveDate::from_ymd_opt(2018, 2, 1).unwrap()]);
        let x = build_design_matrix(&stations, &gdp, &pop, &cal, ts(2018, 1, 1, 0)).unwrap();
        let hol = x.column("holiday").unwrap();
        assert_eq!(hol, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let feb = x.column("month_2").unwrap();
        assert_eq!(feb, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn misaligned_and_nonpositive_inputs() {
        let start = ts(2018, 1, 1, 0);
        let (stations, gdp, pop) = inputs(start, 10);
        let short = HourlySeries::constant(start, 9, 1.0, Unit::Gdp).unwrap();
        let cal = HolidayCalendar::default();
        assert!(matches!(
            build_design_matrix(&stations, &short, &pop, &cal, start),
            Err(Error::Alignment(_))
        ));
        let zero = HourlySeries::constant(start, 10, 0.0, Unit::Persons).unwrap();
        assert!(matches!(
            build_design_matrix(&stations, &gdp, &zero, &cal, start),
            Err(Error::Domain(_))
        ));
        assert!(build_design_matrix(&stations[..4], &gdp, &pop, &cal, start).is_err());
    }

    #[test]
    fn without_columns_drops_names() {
        let start = ts(2018, 1, 1, 0);
        let (stations, gdp, pop) = inputs(start, 10);
        let x = build_design_matrix(&stations, &gdp, &pop, &HolidayCalendar::default(), start)
            .unwrap();
        let r = x.without_columns(&[1, 2]);
        assert_eq!(r.ncols(), 53);
        assert!(r.column_index("ln_gdp").is_none());
        assert_eq!(r.column("trend"), x.column("trend"));
    }
}
