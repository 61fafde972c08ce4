//! Shifted-date weather scenarios.
//!
//! Each scenario replays one historical calendar year, mapped onto the target
//! calendar and shifted by a whole number of days. Every station temperature
//! and capacity-factor series of a scenario uses the same mapping, so spatial
//! and temporal coherence of the archive is preserved. Shifts pull hours from
//! adjacent archive years; pairs that would leave the archive are dropped.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::features::StationTemperature;
use crate::series::{complete_years, hours_in_year, year_start, HourlySeries, Unit};

/// Default day offsets, −4..=+4.
pub const DEFAULT_SHIFTS: [i64; 9] = [-4, -3, -2, -1, 0, 1, 2, 3, 4];

/// Hourly weather of one country in the archive.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryWeather {
    /// `(station_id, °C)` in column order.
    pub stations: Vec<(String, Vec<f64>)>,
    pub wind_cf: Vec<f64>,
    pub solar_cf: Vec<f64>,
}

/// Multi-year hourly archive on one contiguous UTC grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherArchive {
    start: NaiveDateTime,
    len: usize,
    countries: BTreeMap<String, CountryWeather>,
}

impl WeatherArchive {
    pub fn new(start: NaiveDateTime, countries: BTreeMap<String, CountryWeather>) -> Result<Self> {
        if start.minute() != 0 || start.second() != 0 {
            return Err(Error::Input(format!("archive start {start} is not a whole hour")));
        }
        let len = countries
            .values()
            .next()
            .and_then(|c| c.stations.first())
            .map(|(_, v)| v.len())
            .unwrap_or(0);
        if countries.is_empty() || len == 0 {
            return Err(Error::Input("weather archive is empty".into()));
        }
        for (country, w) in &countries {
            if w.stations.is_empty() {
                return Err(Error::Input(format!("{country}: archive has no stations")));
            }
            for (id, temps) in &w.stations {
                if temps.len() != len {
                    return Err(Error::Alignment(format!(
                        "{country}/{id}: {} hours, archive has {len}",
                        temps.len()
                    )));
                }
                if let Some(i) = temps.iter().position(|t| !t.is_finite()) {
                    return Err(Error::Data(format!(
                        "{country}/{id}: non-finite temperature at hour {i}"
                    )));
                }
            }
            for (name, cf) in [("wind_cf", &w.wind_cf), ("solar_cf", &w.solar_cf)] {
                if cf.len() != len {
                    return Err(Error::Alignment(format!(
                        "{country}/{name}: {} hours, archive has {len}",
                        cf.len()
                    )));
                }
                if let Some(i) = cf.iter().position(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Data(format!(
                        "{country}/{name}: capacity factor {} outside [0, 1] at hour {i}",
                        cf[i]
                    )));
                }
            }
        }
        Ok(Self {
            start,
            len,
            countries,
        })
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn countries(&self) -> &BTreeMap<String, CountryWeather> {
        &self.countries
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::hours(index as i64)
    }

    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let delta = ts - self.start;
        if delta < Duration::zero() || delta.num_seconds() % 3600 != 0 {
            return None;
        }
        let i = delta.num_hours() as usize;
        (i < self.len).then_some(i)
    }

    /// Calendar years fully covered by the archive.
    pub fn source_years(&self) -> Vec<i32> {
        complete_years(self.start, self.len)
    }
}

/// Source timestamps (before shifting) for every hour of `target_year` when
/// replaying `source_year`. Feb 29 is dropped for non-leap targets and
/// synthesised from Feb 28 for non-leap sources.
pub fn calendar_mapping(source_year: i32, target_year: i32) -> Vec<NaiveDateTime> {
    let start = year_start(target_year);
    (0..hours_in_year(target_year))
        .map(|h| {
            let t = start + Duration::hours(h as i64);
            let (m, d) = (t.month(), t.day());
            let date = NaiveDate::from_ymd_opt(source_year, m, d)
                .or_else(|| NaiveDate::from_ymd_opt(source_year, 2, 28))
                .expect("valid calendar day");
            date.and_hms_opt(t.hour(), 0, 0).expect("valid hour")
        })
        .collect()
}

/// Re-indexes one full calendar year onto the calendar of `target_year`.
pub fn map_to_target_calendar(source: &HourlySeries, target_year: i32) -> Result<HourlySeries> {
    let year = source.start().year();
    if source.start() != year_start(year) || source.len() != hours_in_year(year) {
        return Err(Error::Input(format!(
            "series from {} with {} hours is not one full calendar year",
            source.start(),
            source.len()
        )));
    }
    let values = calendar_mapping(year, target_year)
        .into_iter()
        .map(|ts| source.values()[source.index_of(ts).expect("inside source year")])
        .collect();
    HourlySeries::new(year_start(target_year), values, source.unit())
}

/// Weather of one country in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioWeather {
    pub temperatures: Vec<StationTemperature>,
    pub wind_cf: HourlySeries,
    pub solar_cf: HourlySeries,
}

/// One simulated weather year.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherScenario {
    pub scenario_id: String,
    pub source_year: i32,
    pub shift_days: i64,
    pub target_year: i32,
    /// Archive hour index feeding each target hour.
    pub source_hours: Vec<usize>,
    pub countries: BTreeMap<String, ScenarioWeather>,
}

impl WeatherScenario {
    pub fn len(&self) -> usize {
        self.source_hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_hours.is_empty()
    }
}

pub fn scenario_id(source_year: i32, shift_days: i64) -> String {
    format!("y{source_year}_s{shift_days:+}")
}

/// Archive indices for `(source_year, shift_days)`, or `None` when any hour
/// falls outside the archive.
pub fn source_indices(
    archive: &WeatherArchive,
    source_year: i32,
    shift_days: i64,
    target_year: i32,
) -> Option<Vec<usize>> {
    let offset = Duration::days(shift_days);
    calendar_mapping(source_year, target_year)
        .into_iter()
        .map(|ts| archive.index_of(ts - offset))
        .collect()
}

/// All feasible `(source_year, shift_days)` pairs, years ascending and shifts
/// in the given order (duplicates removed).
pub fn feasible_pairs(
    archive: &WeatherArchive,
    target_year: i32,
    shifts: &[i64],
) -> Result<Vec<(i32, i64)>> {
    if archive.is_empty() {
        return Err(Error::Input("weather archive is empty".into()));
    }
    let mut unique: Vec<i64> = Vec::with_capacity(shifts.len());
    for &s in shifts {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }
    let mut pairs = Vec::new();
    for year in archive.source_years() {
        for &shift in &unique {
            if source_indices(archive, year, shift, target_year).is_some() {
                pairs.push((year, shift));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Config(format!(
            "no feasible (year, shift) pairs: archive covers {} hours from {} and shifts are {shifts:?}",
            archive.len(),
            archive.start()
        )));
    }
    Ok(pairs)
}

/// Picks `count` pairs, smallest absolute shifts first, so every source year
/// is used unshifted before any year is reused with an offset.
pub fn select_pairs(pairs: &[(i32, i64)], count: usize) -> Result<Vec<(i32, i64)>> {
    if count > pairs.len() {
        return Err(Error::Config(format!(
            "requested {count} weather scenarios but the archive and shift set yield at most {}",
            pairs.len()
        )));
    }
    let mut ordered = pairs.to_vec();
    ordered.sort_by_key(|&(year, shift)| (shift.abs(), shift, year));
    ordered.truncate(count);
    ordered.sort_unstable();
    Ok(ordered)
}

/// Builds the scenario for one `(source_year, shift_days)` pair.
pub fn materialize(
    archive: &WeatherArchive,
    target_year: i32,
    source_year: i32,
    shift_days: i64,
) -> Result<WeatherScenario> {
    let idx = source_indices(archive, source_year, shift_days, target_year).ok_or_else(|| {
        Error::Config(format!(
            "year {source_year} shifted by {shift_days} days leaves the archive"
        ))
    })?;
    let start = year_start(target_year);
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let mut countries = BTreeMap::new();
    for (country, w) in archive.countries() {
        let temperatures = w
            .stations
            .iter()
            .map(|(id, temps)| {
                StationTemperature::new(id.clone(), HourlySeries::new(start, pick(temps), Unit::Celsius)?)
            })
            .collect::<Result<Vec<_>>>()?;
        countries.insert(
            country.clone(),
            ScenarioWeather {
                temperatures,
                wind_cf: HourlySeries::new(start, pick(&w.wind_cf), Unit::CapacityFactor)?,
                solar_cf: HourlySeries::new(start, pick(&w.solar_cf), Unit::CapacityFactor)?,
            },
        );
    }
    Ok(WeatherScenario {
        scenario_id: scenario_id(source_year, shift_days),
        source_year,
        shift_days,
        target_year,
        source_hours: idx,
        countries,
    })
}

/// Every feasible shifted-date scenario for the archive.
pub fn shifted_date_scenarios(
    archive: &WeatherArchive,
    target_year: i32,
    shifts: &[i64],
) -> Result<Vec<WeatherScenario>> {
    feasible_pairs(archive, target_year, shifts)?
        .into_iter()
        .map(|(y, s)| materialize(archive, target_year, y, s))
        .collect()
}
