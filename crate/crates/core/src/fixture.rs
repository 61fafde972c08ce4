//! Seeded synthetic input bundle for tests, examples and demonstrations.
//!
//! The bundle mimics the structure of real inputs for four Nordic countries:
//! five temperature stations per country with seasonal, diurnal and
//! persistent anomaly components shared across the region; wind and solar
//! capacity factors; annual GDP and population; a national holiday list;
//! and hourly consumption drawn from a known log-linear model with Gaussian
//! noise. Everything is a pure function of [`FixtureSpec`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{CountryConfig, InventoryConfig, RunConfig};
use crate::error::{Error, Result};
use crate::features::{
    build_design_matrix, standard_schema, HolidayCalendar, StationTemperature, STATIONS_PER_COUNTRY,
};
use crate::ingest::{
    write_capacity_factors_csv, write_consumption_csv, write_holidays_csv, write_macro_csv,
    write_weather_csv, CapacityFactors, MacroSeries,
};
use crate::scenario::nordic_2012_inventory;
use crate::series::{year_start, HourlySeries, Unit};
use crate::simulate::nordic_2040_capacities;

pub const CONFIG_FILE: &str = "heatrisk.toml";

/// What to generate.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub countries: Vec<String>,
    /// Inclusive range of weather and capacity-factor years.
    pub archive_years: (i32, i32),
    /// Inclusive range of consumption years; must lie inside the archive.
    pub consumption_years: (i32, i32),
    /// Inclusive range of annual macro anchors.
    pub macro_years: (i32, i32),
    pub target_year: i32,
    pub scenario_count: Option<usize>,
    /// Standard deviation of the log-consumption noise.
    pub noise_sigma: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            seed: 2040,
            countries: ["NO", "SE", "DK", "FI"].map(String::from).to_vec(),
            archive_years: (2009, 2016),
            consumption_years: (2011, 2016),
            macro_years: (2011, 2041),
            target_year: 2040,
            scenario_count: Some(60),
            noise_sigma: 0.05,
        }
    }
}

/// Climate and load parameters of one synthetic country.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountryProfile {
    pub mean_temp_c: f64,
    pub seasonal_amplitude_c: f64,
    /// Mean hourly consumption, MWh.
    pub mean_load_mwh: f64,
    /// HDH coefficient of each station.
    pub hdh_coefficients: [f64; STATIONS_PER_COUNTRY],
    pub base_gdp: f64,
    pub base_pop: f64,
    pub latitude_deg: f64,
}

pub fn profile(country: &str) -> CountryProfile {
    let p = |t, a, l, h, g, pop, lat| CountryProfile {
        mean_temp_c: t,
        seasonal_amplitude_c: a,
        mean_load_mwh: l,
        hdh_coefficients: h,
        base_gdp: g,
        base_pop: pop,
        latitude_deg: lat,
    };
    match country {
        "NO" => p(5.5, 9.0, 14_800.0, [0.008, 0.005, 0.0005, 0.002, 0.001], 500.0e9, 5.1e6, 61.0),
        "SE" => p(6.5, 10.0, 15_600.0, [0.006, 0.005, 0.003, 0.0005, 0.002], 570.0e9, 9.7e6, 60.0),
        "DK" => p(8.5, 7.5, 3_800.0, [0.003, 0.002, 0.0005, 0.001, 0.002], 350.0e9, 5.6e6, 56.0),
        "FI" => p(4.5, 12.0, 9_500.0, [0.005, 0.0005, 0.002, 0.003, 0.0005], 270.0e9, 5.5e6, 62.0),
        _ => p(6.0, 9.0, 10_000.0, [0.004; STATIONS_PER_COUNTRY], 300.0e9, 5.0e6, 60.0),
    }
}

/// True coefficients of the consumption model in standard-schema order,
/// with magnitudes typical of fitted Nordic models. The intercept is a
/// placeholder; [`synthetic_consumption`] sets it to hit the country's mean
/// load.
pub fn true_coefficients(country: &str) -> Vec<f64> {
    let prof = profile(country);
    let mut beta = vec![0.0, 0.25, 0.6];
    beta.extend(prof.hdh_coefficients);
    beta.extend([0.002; STATIONS_PER_COUNTRY]);
    let daily = |h: f64| -0.12 * (2.0 * PI * (h - 4.0) / 24.0).cos() + 0.04 * (4.0 * PI * h / 24.0).sin();
    beta.extend((1..=23).map(|h| daily(h as f64) - daily(0.0)));
    beta.extend([-0.008, -0.045, -0.106, -0.152, -0.18, -0.216, -0.16, -0.13, -0.085, -0.033, -0.024]);
    beta.extend([0.004, 0.005, 0.004, -0.01, -0.1, -0.07]);
    beta.push(-0.11);
    beta.push(-2.0e-7);
    debug_assert_eq!(beta.len(), standard_schema().len());
    beta
}

fn hours_between(a: NaiveDateTime, b: NaiveDateTime) -> usize {
    (b - a).num_hours() as usize
}

/// Deterministic per-purpose stream so adding a country does not change the
/// draws of the others.
fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

/// Stationary AR(1) path with hourly persistence `phi` and marginal sd `sd`.
fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let innov = Normal::new(0.0, sd * (1.0 - phi * phi).sqrt()).expect("valid sd");
    let mut x = Normal::new(0.0, sd).expect("valid sd").sample(rng);
    (0..n)
        .map(|_| {
            x = phi * x + innov.sample(rng);
            x
        })
        .collect()
}

fn day_fraction(ts: NaiveDateTime) -> f64 {
    (ts.ordinal0() as f64 + ts.hour() as f64 / 24.0) / 365.25
}

/// Temperatures of the five stations of every country over `[start, start+n)`.
pub fn synthetic_temperatures(
    seed: u64,
    countries: &[String],
    start: NaiveDateTime,
    n: usize,
) -> BTreeMap<String, Vec<StationTemperature>> {
    let mut shared_rng = stream(seed, "nordic-temperature");
    let regional = ar1(&mut shared_rng, n, (-1.0f64 / 96.0).exp(), 3.0);
    let first_year = start.year();
    let year_anom: Vec<f64> = (0..=n / 8760 + 2)
        .map(|_| Normal::new(0.0, 1.2).expect("sd").sample(&mut shared_rng))
        .collect();
    let mut out = BTreeMap::new();
    for c in countries {
        let prof = profile(c);
        let mut rng = stream(seed, &format!("temperature-{c}"));
        let national = ar1(&mut rng, n, (-1.0f64 / 48.0).exp(), 1.8);
        let stations = (0..STATIONS_PER_COUNTRY)
            .map(|k| {
                let offset = rng.random_range(-3.0..3.0);
                let local = ar1(&mut rng, n, (-1.0f64 / 6.0).exp(), 0.7);
                let values: Vec<f64> = (0..n)
                    .map(|i| {
                        let ts = start + Duration::hours(i as i64);
                        let season = (2.0 * PI * (day_fraction(ts) - 20.0 / 365.25)).cos();
                        let winter = season.max(0.0);
                        let diurnal = -3.0 * (2.0 * PI * (ts.hour() as f64 - 3.0) / 24.0).cos();
                        let ya = year_anom[(ts.year() - first_year) as usize];
                        let anomaly = (regional[i] + national[i]) * (1.0 + 0.6 * winter) + ya;
                        let t = prof.mean_temp_c + offset - prof.seasonal_amplitude_c * season
                            + diurnal * (1.0 - 0.5 * winter)
                            + anomaly
                            + local[i];
                        (t * 100.0).round() / 100.0
                    })
                    .collect();
                let series = HourlySeries::new(start, values, Unit::Celsius).expect("hourly start");
                StationTemperature::new(format!("{c}{:02}", k + 1), series).expect("finite")
            })
            .collect();
        out.insert(c.clone(), stations);
    }
    out
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Wind and solar capacity factors of every country over `[start, start+n)`.
pub fn synthetic_capacity_factors(
    seed: u64,
    countries: &[String],
    start: NaiveDateTime,
    n: usize,
) -> BTreeMap<String, CapacityFactors> {
    let mut shared_rng = stream(seed, "nordic-wind");
    let regional = ar1(&mut shared_rng, n, (-1.0f64 / 30.0).exp(), 0.9);
    let mut out = BTreeMap::new();
    for c in countries {
        let prof = profile(c);
        let mut rng = stream(seed, &format!("vre-{c}"));
        let national = ar1(&mut rng, n, (-1.0f64 / 20.0).exp(), 0.6);
        let clouds = ar1(&mut rng, n, (-1.0f64 / 12.0).exp(), 1.2);
        let lat = prof.latitude_deg.to_radians();
        let mut wind = Vec::with_capacity(n);
        let mut solar = Vec::with_capacity(n);
        for i in 0..n {
            let ts = start + Duration::hours(i as i64);
            let season = (2.0 * PI * (day_fraction(ts) - 20.0 / 365.25)).cos();
            let w = logistic(-0.9 + 0.35 * season + 1.1 * (regional[i] + national[i]));
            wind.push((w * 1e4).round() / 1e4);
            let decl = 23.44f64.to_radians() * (2.0 * PI * (ts.ordinal() as f64 + 284.0) / 365.0).sin();
            let hour_angle = 2.0 * PI * (ts.hour() as f64 + 0.5 - 11.0) / 24.0;
            let elev = lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos();
            let s = 0.8 * elev.max(0.0) * (0.35 + 0.65 * logistic(clouds[i]));
            solar.push((s.min(1.0) * 1e4).round() / 1e4);
        }
        out.insert(
            c.clone(),
            CapacityFactors {
                wind: HourlySeries::new(start, wind, Unit::CapacityFactor).expect("hourly start"),
                solar: HourlySeries::new(start, solar, Unit::CapacityFactor).expect("hourly start"),
            },
        );
    }
    out
}

/// Annual GDP and population with uneven growth, anchored at the first year.
pub fn synthetic_macro(seed: u64, country: &str, years: (i32, i32)) -> Vec<(i32, f64, f64)> {
    let prof = profile(country);
    let mut rng = stream(seed, &format!("macro-{country}"));
    let (mut g, mut p) = (prof.base_gdp, prof.base_pop);
    let mut out = Vec::new();
    for y in years.0..=years.1 {
        out.push((y, g.round(), p.round()));
        g *= 1.0 + rng.random_range(-0.01..0.04);
        p *= 1.0 + rng.random_range(0.002..0.012);
    }
    out
}

/// Western Easter Sunday (anonymous Gregorian algorithm).
pub fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).expect("valid Easter date")
}

/// Common national holidays: fixed dates, the Easter cycle and a national day.
pub fn national_holidays(country: &str, years: (i32, i32)) -> HolidayCalendar {
    let national_day = match country {
        "NO" => Some((5, 17)),
        "SE" => Some((6, 6)),
        "DK" => Some((6, 5)),
        "FI" => Some((12, 6)),
        _ => None,
    };
    let mut dates = Vec::new();
    for y in years.0..=years.1 {
        let ymd = |m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid date");
        dates.extend([ymd(1, 1), ymd(5, 1), ymd(12, 24), ymd(12, 25), ymd(12, 26)]);
        if let Some((m, d)) = national_day {
            dates.push(ymd(m, d));
        }
        let easter = easter_sunday(y);
        for off in [-2, 1, 39, 50] {
            dates.push(easter + Duration::days(off));
        }
        if country == "SE" || country == "FI" {
            // Midsummer Eve: the Friday between 19 and 25 June.
            let mut d = ymd(6, 19);
            while d.weekday() != Weekday::Fri {
                d = d.succ_opt().expect("June date");
            }
            dates.push(d);
        }
    }
    HolidayCalendar::new(dates)
}

/// Hourly consumption of one country from the true model plus noise. The
/// intercept is chosen so the mean load over the span matches the profile.
pub fn synthetic_consumption(
    seed: u64,
    country: &str,
    stations: &[StationTemperature],
    macro_series: &MacroSeries,
    holidays: &HolidayCalendar,
    noise_sigma: f64,
) -> Result<HourlySeries> {
    let start = stations[0].series.start();
    let n = stations[0].series.len();
    let (gdp, pop) = macro_series.window(start, n)?;
    let x = build_design_matrix(stations, &gdp, &pop, holidays, start)?;
    let mut beta = true_coefficients(country);
    let lin = x.data() * DVector::from_column_slice(&beta);
    let mean_exp = lin.iter().map(|v| v.exp()).sum::<f64>() / n as f64;
    beta[0] = (profile(country).mean_load_mwh / mean_exp).ln();
    let mut rng = stream(seed, &format!("consumption-{country}"));
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Input(e.to_string()))?;
    let values = lin
        .iter()
        .map(|v| {
            let c = (v + beta[0] + noise.sample(&mut rng)).exp();
            (c * 1000.0).round() / 1000.0
        })
        .collect();
    HourlySeries::new(start, values, Unit::Mwh)
}

/// Writes the full input bundle and a run config to `dir`; returns the
/// config path.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> Result<PathBuf> {
    let (a0, a1) = spec.archive_years;
    let (c0, c1) = spec.consumption_years;
    if !(a0 <= c0 && c0 <= c1 && c1 <= a1) {
        return Err(Error::Config(format!(
            "consumption years {c0}..={c1} must lie inside the archive {a0}..={a1}"
        )));
    }
    let start = year_start(a0);
    let n = hours_between(start, year_start(a1 + 1));
    let temps = synthetic_temperatures(spec.seed, &spec.countries, start, n);
    let cfs = synthetic_capacity_factors(spec.seed, &spec.countries, start, n);
    write_capacity_factors_csv(&dir.join("capacity_factors.csv"), &cfs)?;

    let inventories = nordic_2012_inventory();
    let caps = nordic_2040_capacities();
    let holiday_years = (a0.min(spec.macro_years.0), a1.max(spec.macro_years.1));
    let cons_start = year_start(c0);
    let cons_len = hours_between(cons_start, year_start(c1 + 1));
    let mut countries = Vec::new();
    for c in &spec.countries {
        let stations = &temps[c];
        let anchors = synthetic_macro(spec.seed, c, spec.macro_years);
        let macro_series = MacroSeries::from_anchors(anchors.clone())?;
        let holidays = national_holidays(c, holiday_years);
        let cons_stations = stations
            .iter()
            .map(|s| {
                let w = s.series.window(cons_start, cons_len).expect("inside the archive");
                StationTemperature::new(s.station_id.clone(), w)
            })
            .collect::<Result<Vec<_>>>()?;
        let consumption =
            synthetic_consumption(spec.seed, c, &cons_stations, &macro_series, &holidays, spec.noise_sigma)?;

        let sub = dir.join(c);
        write_consumption_csv(&sub.join("consumption.csv"), &consumption)?;
        write_weather_csv(&sub.join("weather.csv"), stations)?;
        write_macro_csv(&sub.join("macro.csv"), &anchors)?;
        write_holidays_csv(&sub.join("holidays.csv"), &holidays)?;

        let inv = inventories.iter().find(|i| &i.country == c);
        let cap = caps.get(c.as_str()).copied();
        countries.push(CountryConfig {
            id: c.clone(),
            consumption: PathBuf::from(format!("{c}/consumption.csv")),
            weather: PathBuf::from(format!("{c}/weather.csv")),
            macro_path: PathBuf::from(format!("{c}/macro.csv")),
            holidays: PathBuf::from(format!("{c}/holidays.csv")),
            wind_gw: cap.map_or(5.0, |v| v.wind_gw),
            solar_gw: cap.map_or(2.0, |v| v.solar_gw),
            inventory: inv.map_or(
                InventoryConfig {
                    fossil_space_water: 10.0,
                    fossil_district: 5.0,
                    direct_electric_sw: 20.0,
                    fossil_process: 10.0,
                },
                |i| InventoryConfig {
                    fossil_space_water: i.fossil_space_water,
                    fossil_district: i.fossil_district,
                    direct_electric_sw: i.direct_electric_sw,
                    fossil_process: i.fossil_process,
                },
            ),
        });
    }

    let cfg = RunConfig {
        target_year: spec.target_year,
        shares: vec![0.0, 0.5, 1.0],
        shifts: crate::weathergen::DEFAULT_SHIFTS.to_vec(),
        scenario_count: spec.scenario_count,
        jobs: 4,
        output_dir: PathBuf::from("out"),
        data_dir: None,
        seed: None,
        train_fraction: crate::calibrate::DEFAULT_TRAIN_FRACTION,
        replacement_factor: crate::scenario::DEFAULT_REPLACEMENT_FACTOR,
        write_hourly: false,
        plots: true,
        capacity_factors: PathBuf::from("capacity_factors.csv"),
        countries,
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join(CONFIG_FILE);
    std::fs::write(&path, cfg.to_toml_string()?)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}
