//! Least-squares calibration of the log-linear consumption model, accuracy
//! indices and effect sizes.

use std::ops::Range;

use chrono::NaiveDateTime;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ColumnGroup, FeatureMatrix};
use crate::series::{HourlySeries, Unit};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Singular values of the column-equilibrated design below this fraction of
/// the largest one mark the design as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Actual loads below this are rejected when computing percentage errors.
pub const MIN_ACTUAL_MWH: f64 = 1.0;

/// Row ranges of a chronological train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainValidSplit {
    pub train: Range<usize>,
    pub valid: Range<usize>,
}

/// Splits `n` chronologically ordered rows: the first `round(fraction * n)`
/// rows train, the rest validate.
pub fn split_train_valid(n: usize, fraction: f64) -> Result<TrainValidSplit> {
    if n == 0 {
        return Err(Error::Input("cannot split an empty dataset".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Input(format!(
            "training fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n_train = ((fraction * n as f64).round() as usize).clamp(1, n);
    if n_train == n {
        log::warn!("training fraction {fraction} leaves the validation sample empty");
    }
    Ok(TrainValidSplit {
        train: 0..n_train,
        valid: n_train..n,
    })
}

/// Design matrix paired with observed hourly consumption.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: FeatureMatrix,
    pub consumption: HourlySeries,
}

impl Dataset {
    pub fn new(x: FeatureMatrix, consumption: HourlySeries) -> Result<Self> {
        if x.nrows() != consumption.len() || x.start() != consumption.start() {
            return Err(Error::Alignment(format!(
                "design matrix ({} rows from {}) and consumption ({} rows from {}) differ",
                x.nrows(),
                x.start(),
                consumption.len(),
                consumption.start()
            )));
        }
        if let Some(i) = consumption.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "consumption must be positive for the log model, got {} at {}",
                consumption.values()[i],
                consumption.timestamp(i)
            )));
        }
        Ok(Self { x, consumption })
    }

    pub fn len(&self) -> usize {
        self.consumption.len()
    }

    pub fn is_empty(&self) -> bool {
        self.consumption.is_empty()
    }

    pub fn ln_consumption(&self) -> Vec<f64> {
        self.consumption.values().iter().map(|v| v.ln()).collect()
    }

    pub fn rows(&self, range: Range<usize>) -> Dataset {
        Dataset {
            x: self.x.rows(range.clone()),
            consumption: self.consumption.slice(range),
        }
    }

    pub fn split(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        let s = split_train_valid(self.len(), fraction)?;
        Ok((self.rows(s.train), self.rows(s.valid)))
    }
}

/// Fitted log-linear consumption model for one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub country: String,
    pub schema: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Classical OLS standard errors.
    pub std_errors: Vec<f64>,
    /// SSE / (n − p); zero when the fit is exactly determined.
    pub residual_variance: f64,
    pub r_squared: f64,
    pub n_obs: usize,
    pub trend_origin: NaiveDateTime,
    /// max_j |x_jᵀ r| / (‖x_j‖ ‖r‖) at the solution.
    pub max_residual_cosine: f64,
}

impl CalibratedModel {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.schema
            .iter()
            .position(|c| c == name)
            .map(|j| self.coefficients[j])
    }

    pub fn ensure_schema(&self, x: &FeatureMatrix) -> Result<()> {
        if x.schema() != self.schema.as_slice() {
            return Err(Error::Contract(format!(
                "model {} schema ({} columns) does not match design matrix ({} columns)",
                self.country,
                self.schema.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Linear predictor Xβ (log consumption).
    pub fn predict_log(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.ensure_schema(x)?;
        let beta = DVector::from_column_slice(&self.coefficients);
        Ok((x.data() * beta).iter().copied().collect())
    }
}

/// Ordinary least squares on the log scale via Householder QR of the
/// column-equilibrated design.
pub fn fit_ols(x: &FeatureMatrix, y: &[f64], country: &str) -> Result<CalibratedModel> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::Contract(format!(
            "design has {n} rows but response has {} values",
            y.len()
        )));
    }
    if p == 0 || n < p {
        return Err(Error::Calibration {
            message: format!("need at least as many rows ({n}) as columns ({p})"),
            columns: Vec::new(),
        });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("response value {i} is not finite")));
    }
    if let Some(j) = (0..p).find(|&j| x.data().column(j).iter().any(|v| !v.is_finite())) {
        return Err(Error::Input(format!(
            "column {} contains non-finite values",
            x.schema()[j]
        )));
    }

    let norms: Vec<f64> = (0..p).map(|j| x.data().column(j).norm()).collect();
    let zero_cols: Vec<String> = (0..p)
        .filter(|&j| norms[j] == 0.0)
        .map(|j| x.schema()[j].clone())
        .collect();
    if !zero_cols.is_empty() {
        return Err(Error::Calibration {
            message: "design matrix is rank deficient (all-zero columns)".into(),
            columns: zero_cols,
        });
    }

    let mut scaled = x.data().clone();
    for (j, &nj) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / nj);
    }
    let qr = scaled.qr();
    let r = qr.r();

    check_rank(&r, x.schema())?;

    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p).into_owned();
    let gamma = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
    let beta: Vec<f64> = gamma.iter().zip(&norms).map(|(g, nj)| g / nj).collect();

    let fitted = x.data() * DVector::from_column_slice(&beta);
    let resid: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, f)| a - f).collect();
    let sse: f64 = resid.iter().map(|e| e * e).sum();
    let r_squared = r_squared_from(y, sse);
    let dof = n - p;
    let residual_variance = if dof > 0 { sse / dof as f64 } else { 0.0 };

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numeric("could not invert R".into()))?;
    let std_errors: Vec<f64> = (0..p)
        .map(|j| (residual_variance * r_inv.row(j).norm_squared()).sqrt() / norms[j])
        .collect();

    let max_residual_cosine = residual_cosine(x.data(), &resid);

    if let Some(j) = beta.iter().position(|b| !b.is_finite()) {
        return Err(Error::Numeric(format!(
            "coefficient {} is not finite",
            x.schema()[j]
        )));
    }

    Ok(CalibratedModel {
        country: country.to_string(),
        schema: x.schema().to_vec(),
        coefficients: beta,
        std_errors,
        residual_variance,
        r_squared,
        n_obs: n,
        trend_origin: x.trend_origin(),
        max_residual_cosine,
    })
}

fn check_rank(r: &DMatrix<f64>, schema: &[String]) -> Result<()> {
    let svd = r.clone().svd(false, true);
    let max_sv = svd.singular_values.max();
    let tol = RANK_TOLERANCE * max_sv;
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut dependent: Vec<usize> = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= tol {
            // Columns participating in the near-null direction.
            let v = v_t.row(k);
            let vmax = v.amax();
            for (j, c) in v.iter().enumerate() {
                if c.abs() > 1e-3 * vmax && !dependent.contains(&j) {
                    dependent.push(j);
                }
            }
        }
    }
    if dependent.is_empty() {
        return Ok(());
    }
    dependent.sort_unstable();
    Err(Error::Calibration {
        message: "design matrix is rank deficient".into(),
        columns: dependent.into_iter().map(|j| schema[j].clone()).collect(),
    })
}

fn r_squared_from(y: &[f64], sse: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - sse / sst).clamp(0.0, 1.0)
}

/// Largest cosine between the residual vector and any design column.
pub fn residual_cosine(x: &DMatrix<f64>, resid: &[f64]) -> f64 {
    let r = DVector::from_column_slice(resid);
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            col.dot(&r).abs() / (col.norm() * rn)
        })
        .fold(0.0, f64::max)
}

/// Hourly consumption implied by the model: exp(Xβ), in MWh.
pub fn predict(model: &CalibratedModel, x: &FeatureMatrix) -> Result<HourlySeries> {
    let values: Vec<f64> = model.predict_log(x)?.into_iter().map(f64::exp).collect();
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numeric(format!(
            "prediction {} at row {i} is not a positive finite load",
            values[i]
        )));
    }
    HourlySeries::new(x.start(), values, Unit::Mwh)
}

/// Accuracy indices on the linear (MWh) scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// Percent.
    pub mape: f64,
    /// Percent, denominator (|p| + |a|) / 2.
    pub smape: f64,
}

pub fn accuracy(predicted: &HourlySeries, actual: &HourlySeries) -> Result<ErrorMetrics> {
    if !predicted.same_grid(actual) {
        return Err(Error::Contract(format!(
            "predicted ({} h from {}) and actual ({} h from {}) are not aligned",
            predicted.len(),
            predicted.start(),
            actual.len(),
            actual.start()
        )));
    }
    accuracy_values(predicted.values(), actual.values())
}

pub fn accuracy_values(predicted: &[f64], actual: &[f64]) -> Result<ErrorMetrics> {
    if predicted.len() != actual.len() {
        return Err(Error::Contract(format!(
            "length mismatch: {} predicted vs {} actual",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Contract("accuracy needs at least one value".into()));
    }
    if let Some(i) = actual.iter().position(|&a| !(a >= MIN_ACTUAL_MWH)) {
        return Err(Error::Domain(format!(
            "actual value {} at index {i} is below {MIN_ACTUAL_MWH} MWh; percentage errors undefined",
            actual[i]
        )));
    }
    let n = actual.len() as f64;
    let (mut se, mut ae, mut ape, mut sape) = (0.0, 0.0, 0.0, 0.0);
    for (&p, &a) in predicted.iter().zip(actual) {
        let e = p - a;
        se += e * e;
        ae += e.abs();
        ape += e.abs() / a;
        sape += e.abs() / ((p.abs() + a.abs()) / 2.0);
    }
    Ok(ErrorMetrics {
        rmse: (se / n).sqrt(),
        mae: ae / n,
        mape: 100.0 * ape / n,
        smape: 100.0 * sape / n,
    })
}

/// Cohen's f² for a group of columns: (R²_full − R²_reduced) / (1 − R²_full),
/// where the reduced model drops the group's columns and is refit on the same
/// rows.
pub fn effect_size(
    full: &CalibratedModel,
    group: &[&str],
    x: &FeatureMatrix,
    y: &[f64],
) -> Result<f64> {
    full.ensure_schema(x)?;
    if full.n_obs != x.nrows() {
        return Err(Error::Contract(format!(
            "model was fit on {} rows but the dataset has {}",
            full.n_obs,
            x.nrows()
        )));
    }
    if group.is_empty() {
        return Err(Error::Contract("effect size needs a non-empty column group".into()));
    }
    let mut drop = Vec::with_capacity(group.len());
    for name in group {
        let j = x
            .column_index(name)
            .ok_or_else(|| Error::Contract(format!("column {name} is not in the schema")))?;
        if !drop.contains(&j) {
            drop.push(j);
        }
    }
    let unexplained = 1.0 - full.r_squared;
    if !(unexplained > 0.0) {
        return Err(Error::Numeric(
            "full model explains all variance; f² is unbounded".into(),
        ));
    }
    let r2_reduced = if drop.len() == x.ncols() {
        0.0
    } else {
        fit_ols(&x.without_columns(&drop), y, &full.country)?.r_squared
    };
    let f2 = (full.r_squared - r2_reduced) / unexplained;
    if f2 < -1e-8 {
        return Err(Error::Numeric(format!(
            "reduced model fits better than the full model (f² = {f2})"
        )));
    }
    Ok(f2.max(0.0))
}

/// f² for every regressor group present in the schema, in schema order.
pub fn effect_sizes_by_group(
    full: &CalibratedModel,
    x: &FeatureMatrix,
    y: &[f64],
) -> Result<Vec<(ColumnGroup, f64)>> {
    let mut out = Vec::new();
    for group in ColumnGroup::REGRESSORS {
        let cols: Vec<&str> = x
            .schema()
            .iter()
            .filter(|c| ColumnGroup::of_column(c) == Some(group))
            .map(String::as_str)
            .collect();
        if cols.is_empty() {
            continue;
        }
        out.push((group, effect_size(full, &cols, x, y)?));
    }
    Ok(out)
}
