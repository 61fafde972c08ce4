//! Heating-electrification scenarios.
//!
//! Temperature-sensitive fossil heating (space/water and district heating)
//! is replaced by electricity at a fixed conversion factor; the ratio of the
//! replacement electricity to today's direct electric space/water heating is
//! the relative increase applied to every heating-degree-hour coefficient.
//! Fossil process heat is replaced by a flat load spread evenly over the year.

use serde::{Deserialize, Serialize};

use crate::calibrate::{predict, CalibratedModel};
use crate::error::{Error, Result};
use crate::features::{hdh_columns, FeatureMatrix};
use crate::series::{HourlySeries, Unit, HOURS_PER_YEAR};

/// Joules of electricity replacing one joule of temperature-sensitive fossil heat.
pub const DEFAULT_REPLACEMENT_FACTOR: f64 = 0.475;

/// Annual heating energy by source, TWh/yr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingInventory {
    pub country: String,
    pub fossil_space_water: f64,
    pub fossil_district: f64,
    pub direct_electric_sw: f64,
    pub fossil_process: f64,
}

impl HeatingInventory {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fossil_space_water", self.fossil_space_water),
            ("fossil_district", self.fossil_district),
            ("direct_electric_sw", self.direct_electric_sw),
            ("fossil_process", self.fossil_process),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!(
                    "{}: {name} must be a non-negative number, got {v}",
                    self.country
                )));
            }
        }
        Ok(())
    }

    /// Space/water plus district heating, TWh/yr.
    pub fn temperature_sensitive_fossil(&self) -> f64 {
        self.fossil_space_water + self.fossil_district
    }
}

/// 2012 heating inventory for Norway, Sweden, Denmark and Finland (TWh/yr).
pub fn nordic_2012_inventory() -> Vec<HeatingInventory> {
    let row = |c: &str, sw: f64, dh: f64, el: f64, pr: f64| HeatingInventory {
        country: c.to_string(),
        fossil_space_water: sw,
        fossil_district: dh,
        direct_electric_sw: el,
        fossil_process: pr,
    };
    vec![
        row("NO", 9.7, 0.9, 29.0, 17.6),
        row("SE", 11.0, 0.0, 21.5, 25.4),
        row("DK", 16.9, 18.1, 2.7, 11.9),
        row("FI", 17.9, 36.4, 20.0, 24.9),
    ]
}

/// Electricity needed to replace temperature-sensitive fossil heating, TWh/yr.
pub fn replacement_electricity(inventory: &HeatingInventory, factor: f64) -> Result<f64> {
    inventory.validate()?;
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(Error::Input(format!(
            "replacement factor must be non-negative, got {factor}"
        )));
    }
    Ok(factor * inventory.temperature_sensitive_fossil())
}

/// Replacement electricity relative to existing direct electric space/water heating.
pub fn implied_sensitivity_increase(replacement_twh: f64, direct_electric_sw_twh: f64) -> Result<f64> {
    if !(direct_electric_sw_twh > 0.0) {
        return Err(Error::Domain(format!(
            "direct electric heating must be positive to scale sensitivity, got {direct_electric_sw_twh}"
        )));
    }
    if !(replacement_twh.is_finite() && replacement_twh >= 0.0) {
        return Err(Error::Input(format!(
            "replacement electricity must be non-negative, got {replacement_twh}"
        )));
    }
    Ok(replacement_twh / direct_electric_sw_twh)
}

/// Electrification level for one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub country: String,
    /// 0 = business as usual, 0.5 = half, 1 = full electrification.
    pub share: f64,
    pub hdh_multiplier: f64,
    /// Flat annual addition, TWh/yr.
    pub baseload_twh: f64,
}

impl ScenarioSpec {
    pub fn business_as_usual(country: &str) -> Self {
        Self {
            country: country.to_string(),
            share: 0.0,
            hdh_multiplier: 1.0,
            baseload_twh: 0.0,
        }
    }

    /// Relative HDH-coefficient increase, as a fraction.
    pub fn sensitivity_increase(&self) -> f64 {
        self.hdh_multiplier - 1.0
    }

    /// Flat baseload per hour, MWh.
    pub fn baseload_mwh_per_hour(&self) -> f64 {
        self.baseload_twh * 1e6 / HOURS_PER_YEAR
    }
}

pub fn build_scenario(inventory: &HeatingInventory, share: f64, factor: f64) -> Result<ScenarioSpec> {
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::Input(format!(
            "electrification share must be in [0, 1], got {share}"
        )));
    }
    let replacement = replacement_electricity(inventory, factor)?;
    let increase = implied_sensitivity_increase(replacement, inventory.direct_electric_sw)?;
    Ok(ScenarioSpec {
        country: inventory.country.clone(),
        share,
        hdh_multiplier: 1.0 + share * increase,
        baseload_twh: share * inventory.fossil_process,
    })
}

/// Short label for a share: BAU, HALF, FULL or a percentage.
pub fn share_label(share: f64) -> String {
    if share == 0.0 {
        "BAU".into()
    } else if share == 0.5 {
        "HALF".into()
    } else if share == 1.0 {
        "FULL".into()
    } else {
        format!("S{:03}", (share * 100.0).round() as i64)
    }
}

/// Consumption model with scaled heating sensitivity and a flat baseload.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedModel {
    pub model: CalibratedModel,
    pub spec: ScenarioSpec,
    pub baseload_mwh: f64,
}

impl ModifiedModel {
    /// exp(Xβ′) + baseload, MWh per hour.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<HourlySeries> {
        let base = predict(&self.model, x)?;
        let b = self.baseload_mwh;
        Ok(base.map(Unit::Mwh, |v| v + b))
    }
}

pub fn apply_electrification(model: &CalibratedModel, spec: &ScenarioSpec) -> Result<ModifiedModel> {
    if !(spec.hdh_multiplier >= 1.0 && spec.hdh_multiplier.is_finite()) {
        return Err(Error::Input(format!(
            "HDH multiplier must be >= 1, got {}",
            spec.hdh_multiplier
        )));
    }
    if !(spec.baseload_twh >= 0.0 && spec.baseload_twh.is_finite()) {
        return Err(Error::Input(format!(
            "baseload must be >= 0 TWh, got {}",
            spec.baseload_twh
        )));
    }
    let mut modified = model.clone();
    for name in hdh_columns() {
        let j = model.schema.iter().position(|c| *c == name).ok_or_else(|| {
            Error::Contract(format!("model {} has no column {name}", model.country))
        })?;
        let c = model.coefficients[j];
        if c < 0.0 && spec.hdh_multiplier != 1.0 {
            log::warn!(
                "{}: {name} coefficient {c} is negative; scaling it lowers heating demand",
                model.country
            );
        }
        modified.coefficients[j] = c * spec.hdh_multiplier;
    }
    Ok(ModifiedModel {
        model: modified,
        spec: spec.clone(),
        baseload_mwh: spec.baseload_mwh_per_hour(),
    })
}

/// One country's row of the scenario table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTableRow {
    pub country: String,
    pub temperature_sensitive_fossil_twh: f64,
    pub replacement_electric_twh: f64,
    pub direct_electric_sw_twh: f64,
    /// Percent.
    pub implied_increase_pct: f64,
    pub fossil_process_twh: f64,
    /// `(share, increase %, constant TWh)` per requested share.
    pub scenarios: Vec<(f64, f64, f64)>,
}

pub fn scenario_table(
    inventories: &[HeatingInventory],
    shares: &[f64],
    factor: f64,
) -> Result<Vec<ScenarioTableRow>> {
    inventories
        .iter()
        .map(|inv| {
            let replacement = replacement_electricity(inv, factor)?;
            let increase = implied_sensitivity_increase(replacement, inv.direct_electric_sw)?;
            let scenarios = shares
                .iter()
                .map(|&s| {
                    let spec = build_scenario(inv, s, factor)?;
                    Ok((s, 100.0 * spec.sensitivity_increase(), spec.baseload_twh))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ScenarioTableRow {
                country: inv.country.clone(),
                temperature_sensitive_fossil_twh: inv.temperature_sensitive_fossil(),
                replacement_electric_twh: replacement,
                direct_electric_sw_twh: inv.direct_electric_sw,
                implied_increase_pct: 100.0 * increase,
                fossil_process_twh: inv.fossil_process,
                scenarios,
            })
        })
        .collect()
}

/// Plain-text rendering at one decimal.
pub fn render_scenario_table(rows: &[ScenarioTableRow]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "");
    for r in rows {
        let _ = write!(out, "{:>12}", r.country);
    }
    out.push('\n');
    let line = |out: &mut String, label: &str, f: &dyn Fn(&ScenarioTableRow) -> String| {
        let _ = write!(out, "{label:<8}");
        for r in rows {
            let _ = write!(out, "{:>12}", f(r));
        }
        out.push('\n');
    };
    line(&mut out, "tsfossil", &|r| format!("{:.1} TWh", r.temperature_sensitive_fossil_twh));
    line(&mut out, "replace", &|r| format!("{:.1} TWh", r.replacement_electric_twh));
    line(&mut out, "direct", &|r| format!("{:.1} TWh", r.direct_electric_sw_twh));
    line(&mut out, "increase", &|r| format!("{:.1}%", r.implied_increase_pct));
    line(&mut out, "process", &|r| format!("{:.1} TWh", r.fossil_process_twh));
    if let Some(first) = rows.first() {
        for (k, (share, _, _)) in first.scenarios.iter().enumerate() {
            let label = share_label(*share);
            line(&mut out, &format!("{label} inc"), &|r| format!("{:.1}%", r.scenarios[k].1));
            line(&mut out, &format!("{label} const"), &|r| format!("{:.1} TWh", r.scenarios[k].2));
        }
    }
    out
}
