//! Fits the hourly consumption model to a synthetic country whose true
//! coefficients are known, then reports accuracy and effect sizes.
//!
//! ```text
//! cargo run --release --example calibrate_synthetic -- SE
//! ```

use heatrisk::calibrate::{accuracy, effect_sizes_by_group, fit_ols, predict, Dataset};
use heatrisk::features::build_design_matrix;
use heatrisk::fixture::{
    national_holidays, synthetic_consumption, synthetic_macro, synthetic_temperatures, true_coefficients,
};
use heatrisk::ingest::MacroSeries;
use heatrisk::series::{hours_in_year, year_start};

fn main() -> heatrisk::Result<()> {
    let country = std::env::args().nth(1).unwrap_or_else(|| "SE".into());
    let seed = 2040;
    let years = (2012, 2016);
    let start = year_start(years.0);
    let n: usize = (years.0..=years.1).map(hours_in_year).sum();

    let stations = synthetic_temperatures(seed, std::slice::from_ref(&country), start, n)
        .remove(&country)
        .expect("one country requested");
    let macro_series = MacroSeries::from_anchors(synthetic_macro(seed, &country, (years.0, years.1 + 1)))?;
    let holidays = national_holidays(&country, years);
    let consumption = synthetic_consumption(seed, &country, &stations, &macro_series, &holidays, 0.05)?;

    let (gdp, pop) = macro_series.window(start, n)?;
    let x = build_design_matrix(&stations, &gdp, &pop, &holidays, start)?;
    let dataset = Dataset::new(x, consumption)?;
    let (train, valid) = dataset.split(0.75)?;
    let model = fit_ols(&train.x, &train.ln_consumption(), &country)?;

    println!("{country}: {} training hours, R² {:.4}", model.n_obs, model.r_squared);
    let truth = true_coefficients(&country);
    println!("{:<10}{:>12}{:>12}{:>10}", "column", "true", "fitted", "s.e.");
    for (j, name) in model.schema.iter().enumerate() {
        if name.starts_with("hdh_") || name.starts_with("cdh_") || name == "holiday" {
            println!(
                "{name:<10}{:>12.5}{:>12.5}{:>10.5}",
                truth[j], model.coefficients[j], model.std_errors[j]
            );
        }
    }

    for (label, part) in [("train", &train), ("valid", &valid)] {
        let m = accuracy(&predict(&model, &part.x)?, &part.consumption)?;
        println!(
            "{label}: RMSE {:.1} MWh, MAE {:.1} MWh, MAPE {:.2}%, sMAPE {:.2}%",
            m.rmse, m.mae, m.mape, m.smape
        );
    }

    let y = dataset.ln_consumption();
    let full = fit_ols(&dataset.x, &y, &country)?;
    println!("Cohen's f² on the full sample:");
    for (group, f2) in effect_sizes_by_group(&full, &dataset.x, &y)? {
        println!("  {:<12}{f2:>10.4}", group.name());
    }
    Ok(())
}
