//! Projection-year consumption, VRE generation and residual demand per
//! weather scenario, plus copperplate aggregation across countries.

use std::collections::BTreeMap;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{build_design_matrix, HolidayCalendar, StationTemperature};
use crate::scenario::ModifiedModel;
use crate::series::{hours_in_year, stable_sum, year_start, HourlySeries, Unit};
use crate::weathergen::WeatherScenario;

/// Installed wind and solar capacity, GW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VreCapacity {
    pub wind_gw: f64,
    pub solar_gw: f64,
}

/// 2040 wind and PV capacities for the four Nordic countries.
pub fn nordic_2040_capacities() -> BTreeMap<String, VreCapacity> {
    [
        ("NO", 7.2, 0.03),
        ("SE", 21.8, 7.1),
        ("DK", 20.0, 9.1),
        ("FI", 7.4, 7.5),
    ]
    .into_iter()
    .map(|(c, w, s)| {
        (
            c.to_string(),
            VreCapacity {
                wind_gw: w,
                solar_gw: s,
            },
        )
    })
    .collect()
}

/// Macro drivers and holidays over the projection year.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDrivers {
    pub gdp: HourlySeries,
    pub pop: HourlySeries,
    pub holidays: HolidayCalendar,
}

/// Hourly consumption of one country under one weather year, MWh.
pub fn project_consumption(
    model: &ModifiedModel,
    temperatures: &[StationTemperature],
    drivers: &ProjectionDrivers,
) -> Result<HourlySeries> {
    let first = temperatures
        .first()
        .ok_or_else(|| Error::Input("no station temperatures supplied".into()))?;
    let year = first.series.start().year();
    if first.series.start() != year_start(year) || first.series.len() != hours_in_year(year) {
        return Err(Error::Input(format!(
            "weather from {} with {} hours does not cover one full year",
            first.series.start(),
            first.series.len()
        )));
    }
    let x = build_design_matrix(
        temperatures,
        &drivers.gdp,
        &drivers.pop,
        &drivers.holidays,
        model.model.trend_origin,
    )?;
    model.predict(&x)
}

/// Hourly generation from capacity factors, MWh.
pub fn vre_generation(cf: &HourlySeries, capacity_gw: f64) -> Result<HourlySeries> {
    if !(capacity_gw.is_finite() && capacity_gw >= 0.0) {
        return Err(Error::Input(format!(
            "capacity must be non-negative, got {capacity_gw} GW"
        )));
    }
    if let Some(i) = cf.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Data(format!(
            "capacity factor {} outside [0, 1] at {}",
            cf.values()[i],
            cf.timestamp(i)
        )));
    }
    let mw = capacity_gw * 1000.0;
    Ok(cf.map(Unit::Mwh, |v| v * mw))
}

/// Consumption, generation and residual demand on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBalance {
    pub consumption: HourlySeries,
    pub wind: HourlySeries,
    pub solar: HourlySeries,
    /// consumption − wind − solar, hour by hour.
    pub residual: HourlySeries,
    /// Hours where VRE exceeds consumption (negative residual).
    pub surplus_hours: usize,
}

/// Builds a balance whose residual is consumption − wind − solar.
pub fn residual_demand(
    consumption: HourlySeries,
    wind: HourlySeries,
    solar: HourlySeries,
) -> Result<PowerBalance> {
    for (name, s) in [("wind", &wind), ("solar", &solar)] {
        if !s.same_grid(&consumption) {
            return Err(Error::Contract(format!(
                "{name} grid {}+{}h does not match consumption {}+{}h",
                s.start(),
                s.len(),
                consumption.start(),
                consumption.len()
            )));
        }
    }
    let values: Vec<f64> = consumption
        .values()
        .iter()
        .zip(wind.values())
        .zip(solar.values())
        .map(|((c, w), s)| c - w - s)
        .collect();
    let surplus_hours = values.iter().filter(|v| **v < 0.0).count();
    let residual = HourlySeries::new(consumption.start(), values, Unit::Mwh)?;
    Ok(PowerBalance {
        consumption,
        wind,
        solar,
        residual,
        surplus_hours,
    })
}

/// Copperplate sum of several balances. The per-hour sums do not depend on
/// the order of `parts`; the residual is recomputed from the summed series.
pub fn aggregate_nordic(parts: &[&PowerBalance]) -> Result<PowerBalance> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Contract("nothing to aggregate".into()))?;
    for p in &parts[1..] {
        if !p.consumption.same_grid(&first.consumption) {
            return Err(Error::Contract(format!(
                "cannot aggregate grids {}+{}h and {}+{}h",
                p.consumption.start(),
                p.consumption.len(),
                first.consumption.start(),
                first.consumption.len()
            )));
        }
    }
    let sum = |get: fn(&PowerBalance) -> &HourlySeries| -> Result<HourlySeries> {
        let n = first.consumption.len();
        let mut buf = vec![0.0; parts.len()];
        let values = (0..n)
            .map(|h| {
                for (b, p) in buf.iter_mut().zip(parts) {
                    *b = get(p).values()[h];
                }
                stable_sum(&buf)
            })
            .collect();
        HourlySeries::new(first.consumption.start(), values, Unit::Mwh)
    };
    residual_demand(
        sum(|p| &p.consumption)?,
        sum(|p| &p.wind)?,
        sum(|p| &p.solar)?,
    )
}

/// Outcome of one weather scenario under one electrification level.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub scenario_id: String,
    pub share: f64,
    pub countries: BTreeMap<String, PowerBalance>,
    pub nordic: PowerBalance,
}

/// Runs every country of `weather` through its scenario model.
pub fn simulate_scenario(
    weather: &WeatherScenario,
    share: f64,
    models: &BTreeMap<String, ModifiedModel>,
    drivers: &BTreeMap<String, ProjectionDrivers>,
    capacities: &BTreeMap<String, VreCapacity>,
) -> Result<SimulationResult> {
    let mut countries = BTreeMap::new();
    for (country, model) in models {
        let w = weather.countries.get(country).ok_or_else(|| {
            Error::Contract(format!("scenario {} has no weather for {country}", weather.scenario_id))
        })?;
        let d = drivers
            .get(country)
            .ok_or_else(|| Error::Contract(format!("no projection drivers for {country}")))?;
        let cap = capacities
            .get(country)
            .ok_or_else(|| Error::Contract(format!("no VRE capacities for {country}")))?;
        let consumption = project_consumption(model, &w.temperatures, d)?;
        let wind = vre_generation(&w.wind_cf, cap.wind_gw)?;
        let solar = vre_generation(&w.solar_cf, cap.solar_gw)?;
        countries.insert(country.clone(), residual_demand(consumption, wind, solar)?);
    }
    let parts: Vec<&PowerBalance> = countries.values().collect();
    let nordic = aggregate_nordic(&parts)?;
    Ok(SimulationResult {
        scenario_id: weather.scenario_id.clone(),
        share,
        countries,
        nordic,
    })
}
