//! Hourly time series on a contiguous UTC grid.

use std::fmt;
use std::ops::Range;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical quantity carried by a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Mwh,
    Celsius,
    CapacityFactor,
    /// Real GDP, any consistent currency unit.
    Gdp,
    Persons,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::Mwh => "MWh",
            Unit::Celsius => "°C",
            Unit::CapacityFactor => "capacity factor",
            Unit::Gdp => "GDP",
            Unit::Persons => "persons",
        };
        f.write_str(s)
    }
}

/// A timestamped hourly sequence of one quantity.
///
/// The grid is implied by `start` and the number of values: value `i` belongs
/// to `start + i` hours. All timestamps are UTC and whole hours.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    start: NaiveDateTime,
    values: Vec<f64>,
    unit: Unit,
}

impl HourlySeries {
    pub fn new(start: NaiveDateTime, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(Error::Input(format!(
                "series start {start} is not on a whole hour"
            )));
        }
        Ok(Self {
            start,
            values,
            unit,
        })
    }

    pub fn constant(start: NaiveDateTime, len: usize, value: f64, unit: Unit) -> Result<Self> {
        Self::new(start, vec![value; len], unit)
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    /// Timestamp of the last value, or `None` for an empty series.
    pub fn last_timestamp(&self) -> Option<NaiveDateTime> {
        (!self.values.is_empty()).then(|| self.timestamp(self.values.len() - 1))
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::hours(index as i64)
    }

    pub fn timestamps(&self) -> impl Iterator<Item = NaiveDateTime> + '_ {
        (0..self.values.len()).map(move |i| self.timestamp(i))
    }

    /// Index of `ts` on this grid, if it is a whole hour within range.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let delta = ts - self.start;
        if delta.num_seconds() % 3600 != 0 || delta < Duration::zero() {
            return None;
        }
        let idx = delta.num_hours() as usize;
        (idx < self.values.len()).then_some(idx)
    }

    pub fn slice(&self, range: Range<usize>) -> HourlySeries {
        HourlySeries {
            start: self.timestamp(range.start),
            values: self.values[range].to_vec(),
            unit: self.unit,
        }
    }

    /// Sub-series covering `[from, from + len)` hours, if contained in this one.
    pub fn window(&self, from: NaiveDateTime, len: usize) -> Option<HourlySeries> {
        let i = self.index_of(from)?;
        (i + len <= self.values.len()).then(|| self.slice(i..i + len))
    }

    pub fn same_grid(&self, other: &HourlySeries) -> bool {
        self.start == other.start && self.values.len() == other.values.len()
    }

    pub fn ensure_same_grid(&self, other: &HourlySeries, what: &str) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::Alignment(format!(
                "{what}: grid {}+{}h does not match {}+{}h",
                self.start,
                self.len(),
                other.start,
                other.len()
            )))
        }
    }

    /// Sum of all values, independent of their order.
    pub fn total(&self) -> f64 {
        stable_sum(&self.values)
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    pub fn min(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }

    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> HourlySeries {
        HourlySeries {
            start: self.start,
            values: self.values.iter().map(|&v| f(v)).collect(),
            unit,
        }
    }
}

/// Permutation-invariant sum: values are sorted before compensated summation,
/// so any reordering of the input gives a bit-identical result.
pub fn stable_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in sorted {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn stable_mean(values: &[f64]) -> f64 {
    stable_sum(values) / values.len() as f64
}

pub fn is_leap_year(year: i32) -> bool {
    NaiveDate::from_ymd_opt(year, 2, 29).is_some()
}

pub fn hours_in_year(year: i32) -> usize {
    if is_leap_year(year) {
        8784
    } else {
        8760
    }
}

/// Hours in a non-leap year; annual energies are spread over this many hours.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// `YYYY-01-01T00:00:00`.
pub fn year_start(year: i32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("valid year")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
}

/// Whole calendar years fully covered by `[start, start + len)` hours.
pub fn complete_years(start: NaiveDateTime, len: usize) -> Vec<i32> {
    if len == 0 {
        return Vec::new();
    }
    let end = start + Duration::hours(len as i64); // exclusive
    let mut first = start.year();
    if year_start(first) < start {
        first += 1;
    }
    (first..=end.year())
        .filter(|&y| year_start(y + 1) <= end)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(h, 0, 0)
            .unwrap()
    }

    #[test]
    fn rejects_non_hour_start() {
        let start = ts(2020, 1, 1, 0) + Duration::minutes(30);
        assert!(HourlySeries::new(start, vec![1.0], Unit::Mwh).is_err());
    }

    #[test]
    fn index_and_window() {
        let s = HourlySeries::new(ts(2020, 1, 1, 0), (0..48).map(f64::from).collect(), Unit::Mwh)
            .unwrap();
        assert_eq!(s.index_of(ts(2020, 1, 2, 3)), Some(27));
        assert_eq!(s.index_of(ts(2019, 12, 31, 23)), None);
        assert_eq!(s.index_of(ts(2020, 1, 3, 0)), None);
        let w = s.window(ts(2020, 1, 1, 10), 5).unwrap();
        assert_eq!(w.values(), &[10.0, 11.0, 12.0, 13.0, 14.0]);
        assert!(s.window(ts(2020, 1, 2, 20), 5).is_none());
    }

    #[test]
    fn stable_sum_is_order_independent() {
        let a = [1e16, 1.0, -1e16, 3.5, 0.1, 0.2];
        let mut b = a;
        b.reverse();
        assert_eq!(stable_sum(&a).to_bits(), stable_sum(&b).to_bits());
        assert!((stable_sum(&a) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn leap_years() {
        assert_eq!(hours_in_year(2040), 8784);
        assert_eq!(hours_in_year(2041), 8760);
        assert_eq!(hours_in_year(1900), 8760);
    }

    #[test]
    fn complete_years_in_span() {
        assert_eq!(complete_years(ts(2010, 1, 1, 0), 8760 * 2), vec![2010, 2011]);
        assert_eq!(complete_years(ts(2010, 1, 1, 1), 8760 * 2), vec![2011]);
        assert_eq!(complete_years(ts(2010, 1, 1, 1), 8760), Vec::<i32>::new());
        assert_eq!(complete_years(ts(2009, 12, 31, 0), 8760 + 48), vec![2010]);
    }
}
