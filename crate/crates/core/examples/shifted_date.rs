//! Builds shifted-date weather years from a short archive and shows where
//! each scenario draws its hours from.
//!
//! ```text
//! cargo run --example shifted_date
//! ```

use std::collections::BTreeMap;

use heatrisk::fixture::{synthetic_capacity_factors, synthetic_temperatures};
use heatrisk::series::{hours_in_year, year_start};
use heatrisk::weathergen::{feasible_pairs, materialize, select_pairs, CountryWeather, WeatherArchive, DEFAULT_SHIFTS};

fn main() -> heatrisk::Result<()> {
    let countries = vec!["NO".to_string(), "FI".to_string()];
    let start = year_start(2013);
    let n: usize = (2013..=2015).map(hours_in_year).sum();
    let temps = synthetic_temperatures(1, &countries, start, n);
    let cfs = synthetic_capacity_factors(1, &countries, start, n);
    let weather: BTreeMap<String, CountryWeather> = countries
        .iter()
        .map(|c| {
            let w = CountryWeather {
                stations: temps[c].iter().map(|s| (s.station_id.clone(), s.series.values().to_vec())).collect(),
                wind_cf: cfs[c].wind.values().to_vec(),
                solar_cf: cfs[c].solar.values().to_vec(),
            };
            (c.clone(), w)
        })
        .collect();
    let archive = WeatherArchive::new(start, weather)?;

    let target = 2040;
    let pairs = feasible_pairs(&archive, target, &DEFAULT_SHIFTS)?;
    println!(
        "archive {} + {} h gives {} feasible (year, shift) pairs for {target}",
        archive.start(),
        archive.len(),
        pairs.len()
    );
    for (year, shift) in select_pairs(&pairs, 6)? {
        let sc = materialize(&archive, target, year, shift)?;
        let first = archive.timestamp(sc.source_hours[0]);
        let last = archive.timestamp(*sc.source_hours.last().expect("non-empty"));
        let no = &sc.countries["NO"];
        let mean_t = no.temperatures[0].series.values().iter().sum::<f64>() / sc.len() as f64;
        println!(
            "{:<10} {} h from {first} to {last}, NO station 1 mean {mean_t:.2} °C",
            sc.scenario_id,
            sc.len()
        );
    }
    Ok(())
}
