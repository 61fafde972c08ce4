//! Distribution statistics across weather scenarios.
//!
//! CVaR here is the upper-tail mean: high consumption is the adverse outcome,
//! so `cvar_upper(s, 0.05)` averages the ⌈0.05·n⌉ largest samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{stable_mean, stable_sum, HourlySeries};

pub const CVAR_ALPHA: f64 = 0.05;
pub const KDE_GRID_POINTS: usize = 512;
/// Minimum number of scenarios for a 5% tail of at least one sample.
pub const MIN_SCENARIOS: usize = 20;

/// ⌈x⌉, robust to products such as 0.05·300 landing a hair above an integer.
fn ceil_tolerant(x: f64) -> usize {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Number of tail samples for level `alpha` out of `n`.
fn tail_count(alpha: f64, n: usize) -> usize {
    ceil_tolerant(alpha * n as f64)
}

/// Mean of the ⌈alpha·n⌉ largest samples.
pub fn cvar_upper(samples: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Input(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let needed = ceil_tolerant(1.0 / alpha);
    if samples.len() < needed {
        return Err(Error::Input(format!(
            "CVaR at {alpha} needs at least {needed} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("CVaR samples must be finite".into()));
    }
    let k = tail_count(alpha, samples.len()).max(1);
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(stable_mean(&sorted[..k]))
}

/// Lower empirical quantile: the ⌈q·n⌉-th smallest sample.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Input("quantile needs samples and q in [0, 1]".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = tail_count(q, sorted.len()).max(1);
    Ok(sorted[k - 1])
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = stable_mean(samples);
    let sq: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
    (stable_sum(&sq) / (samples.len() - 1) as f64).sqrt()
}

/// Gaussian kernel density estimate on an even grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

/// Silverman's rule of thumb, 1.06·σ̂·n^(−1/5).
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    1.06 * sample_std(samples) * (samples.len() as f64).powf(-0.2)
}

/// Gaussian KDE evaluated on 512 points spanning [min − 3h, max + 3h].
pub fn kde_density(samples: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "density estimate needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("density samples must be finite".into()));
    }
    if !(sample_std(samples) > 0.0) {
        return Err(Error::Domain("samples have zero variance".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Input(format!("bandwidth must be positive, got {h}"))),
        None => silverman_bandwidth(samples),
    };
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (min - 3.0 * h, max + 3.0 * h);
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + i as f64 * step).collect();
    let density = grid
        .iter()
        .map(|&x| {
            let s: f64 = samples
                .iter()
                .map(|&xi| {
                    let u = (x - xi) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(DensityCurve {
        grid,
        density,
        bandwidth: h,
    })
}

/// Hourly loads sorted from highest to lowest. The value at index `i` is the
/// level the load reaches or exceeds for `i + 1` hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationCurve {
    pub values: Vec<f64>,
}

impl DurationCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Hours at or above each rank's level, 1-based.
    pub fn hours(&self) -> impl Iterator<Item = usize> {
        1..=self.values.len()
    }

    /// Share of the year at or above each rank's level.
    pub fn exceedance(&self) -> Vec<f64> {
        let n = self.values.len() as f64;
        self.hours().map(|h| h as f64 / n).collect()
    }

    pub fn total(&self) -> f64 {
        stable_sum(&self.values)
    }
}

pub fn load_duration(series: &HourlySeries) -> DurationCurve {
    let mut values = series.values().to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    DurationCurve { values }
}

/// Scenario-level metric summarised by [`scenario_statistics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TotalTwh,
    PeakConsumptionGwh,
    PeakResidualGwh,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::TotalTwh,
        Metric::PeakConsumptionGwh,
        Metric::PeakResidualGwh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TotalTwh => "total_twh",
            Metric::PeakConsumptionGwh => "peak_consumption_gwh",
            Metric::PeakResidualGwh => "peak_residual_gwh",
        }
    }
}

/// Annual total consumption, TWh.
pub fn total_twh(consumption: &HourlySeries) -> f64 {
    consumption.total() / 1e6
}

/// Single highest hour, GWh.
pub fn peak_gwh(series: &HourlySeries) -> f64 {
    series.max().unwrap_or(f64::NAN) / 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub metric: Metric,
    pub mean: f64,
    pub std_dev: f64,
    pub cvar_upper_5pct: f64,
    pub n_scenarios: usize,
}

pub fn scenario_statistics(metric: Metric, values: &[f64]) -> Result<RiskSummary> {
    if values.len() < MIN_SCENARIOS {
        return Err(Error::Input(format!(
            "CVaR refused: {} scenarios, need at least {MIN_SCENARIOS}",
            values.len()
        )));
    }
    Ok(RiskSummary {
        metric,
        mean: stable_mean(values),
        std_dev: sample_std(values),
        cvar_upper_5pct: cvar_upper(values, CVAR_ALPHA)?,
        n_scenarios: values.len(),
    })
}

/// Rank-wise mean curve and rank-wise upper 5% CVaR ("one-in-twenty") curve.
pub fn representative_duration_curves(
    curves: &[DurationCurve],
) -> Result<(DurationCurve, DurationCurve)> {
    if curves.len() < MIN_SCENARIOS {
        return Err(Error::Input(format!(
            "need at least {MIN_SCENARIOS} duration curves, got {}",
            curves.len()
        )));
    }
    let len = curves[0].len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(Error::Contract("duration curves differ in length".into()));
    }
    let mut mean = Vec::with_capacity(len);
    let mut tail = Vec::with_capacity(len);
    let mut column = vec![0.0; curves.len()];
    for r in 0..len {
        for (slot, c) in column.iter_mut().zip(curves) {
            *slot = c.values[r];
        }
        mean.push(stable_mean(&column));
        tail.push(cvar_upper(&column, CVAR_ALPHA)?);
    }
    Ok((DurationCurve { values: mean }, DurationCurve { values: tail }))
}
