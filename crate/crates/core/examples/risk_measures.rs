//! Upper-tail CVaR, kernel density and load-duration curves on seeded draws.
//!
//! ```text
//! cargo run --example risk_measures
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use heatrisk::risk::{cvar_upper, kde_density, load_duration, quantile, representative_duration_curves};
use heatrisk::series::{hours_in_year, year_start, HourlySeries, Unit};

fn main() -> heatrisk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    println!("standard normal, n = {}", draws.len());
    println!("  95% quantile  {:.4}  (exact 1.6449)", quantile(&draws, 0.95)?);
    println!("  CVaR 5%       {:.4}  (exact 2.0627)", cvar_upper(&draws, 0.05)?);
    let kde = kde_density(&draws[..10_000], None)?;
    let peak = kde.density.iter().copied().fold(0.0, f64::max);
    println!(
        "  KDE bandwidth {:.4}, integral {:.5}, peak {:.4} (exact 0.3989)",
        kde.bandwidth,
        kde.integral(),
        peak
    );

    // Forty synthetic load years and their representative duration curves.
    let year = 2041;
    let n = hours_in_year(year);
    let load = Normal::new(45_000.0, 7_000.0).expect("valid parameters");
    let curves: Vec<_> = (0..40)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| load.sample(&mut rng)).collect();
            HourlySeries::new(year_start(year), v, Unit::Mwh).map(|s| load_duration(&s))
        })
        .collect::<heatrisk::Result<_>>()?;
    let (mean, one_in_twenty) = representative_duration_curves(&curves)?;
    for rank in [1, 10, 100, 876, 4380, n] {
        println!(
            "  {rank:>5} h at or above {:>9.0} MWh (mean)  {:>9.0} MWh (one in twenty)",
            mean.values[rank - 1],
            one_in_twenty.values[rank - 1]
        );
    }
    Ok(())
}
