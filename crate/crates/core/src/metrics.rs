//! The six evaluation measures: MAE, MSE, RMSE, R², MAPE, and the explained
//! variance score. MAPE is reported as a fraction (not a percentage), and
//! samples whose target magnitude is below [`MAPE_ZERO_GUARD`] are excluded
//! from MAPE only, with the exclusion count reported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Targets this close to zero are skipped by MAPE to avoid unbounded ratios.
pub const MAPE_ZERO_GUARD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {expected} targets vs {got} predictions")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least 2 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("target variance is zero; R2 and EVS are undefined")]
    DegenerateTarget,
}

/// One evaluation-set scorecard for one model; one row of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "MAE")]
    pub mae: f64,
    #[serde(rename = "MSE")]
    pub mse: f64,
    #[serde(rename = "RMSE")]
    pub rmse: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "MAPE")]
    pub mape: f64,
    #[serde(rename = "EVS")]
    pub evs: f64,
    pub n: usize,
    pub mape_excluded: usize,
}

/// Column order used by every tabular export of a [`MetricsReport`].
pub const METRIC_COLUMNS: [&str; 6] = ["MAE", "MSE", "RMSE", "R2", "MAPE", "EVS"];

impl MetricsReport {
    /// Metric values in [`METRIC_COLUMNS`] order.
    pub fn values(&self) -> [f64; 6] {
        [self.mae, self.mse, self.rmse, self.r2, self.mape, self.evs]
    }
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Score predictions `yhat` against targets `y`.
///
/// R² is `1 - SSE/SST`; EVS is `1 - Var(y - yhat)/Var(y)` with population
/// variances, so the two coincide exactly when residuals have zero mean.
pub fn compute_metrics(y: &[f64], yhat: &[f64]) -> Result<MetricsReport, MetricsError> {
    if y.len() != yhat.len() {
        return Err(MetricsError::LengthMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    let n = y.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples { n });
    }
    for (i, v) in y.iter().chain(yhat.iter()).enumerate() {
        if !v.is_finite() {
            return Err(MetricsError::NonFinite { index: i % n });
        }
    }

    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    // Constant targets (up to representation noise from computing the mean)
    // leave R2 and EVS undefined.
    if sst / nf <= 1e-24 * (1.0 + y_mean * y_mean) {
        return Err(MetricsError::DegenerateTarget);
    }

    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut ape_sum = 0.0;
    let mut mape_n = 0usize;
    let mut residuals = Vec::with_capacity(n);
    for i in 0..n {
        let e = y[i] - yhat[i];
        residuals.push(e);
        abs_sum += e.abs();
        sq_sum += e * e;
        if y[i].abs() >= MAPE_ZERO_GUARD {
            ape_sum += (e / y[i]).abs();
            mape_n += 1;
        }
    }

    let mse = sq_sum / nf;
    Ok(MetricsReport {
        mae: abs_sum / nf,
        mse,
        rmse: mse.sqrt(),
        r2: 1.0 - sq_sum / sst,
        mape: if mape_n > 0 { ape_sum / mape_n as f64 } else { 0.0 },
        evs: 1.0 - population_variance(&residuals) / (sst / nf),
        n,
        mape_excluded: n - mape_n,
    })
}
