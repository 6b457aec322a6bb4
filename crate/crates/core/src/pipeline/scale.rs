//! Zero-mean unit-variance standardization, fit on training rows only.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

use super::PipelineError;

/// Per-feature mean and population standard deviation from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Compute per-feature means and population stds (divide by n) over the
/// given rows. Constant columns are rejected.
pub fn standardize_fit(x: &Matrix, names: &[String]) -> Result<ScalerParams, PipelineError> {
    let n = x.nrows();
    let d = x.ncols();
    assert!(n > 0, "empty training split");
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for j in 0..d {
        let mut sum = 0.0;
        for i in 0..n {
            sum += x.get(i, j);
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            ss += (x.get(i, j) - mean).powi(2);
        }
        let var = ss / n as f64;
        if var <= 1e-24 * (1.0 + mean * mean) {
            return Err(PipelineError::ConstantColumn {
                column: names.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
            });
        }
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    Ok(ScalerParams { means, stds })
}

/// Apply `(x - mean) / std` cell-wise with training-fit parameters.
pub fn standardize_apply(params: &ScalerParams, x: &Matrix) -> Result<Matrix, PipelineError> {
    if x.ncols() != params.means.len() {
        return Err(PipelineError::DimensionMismatch {
            expected: params.means.len(),
            got: x.ncols(),
        });
    }
    let mut out = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            out.set(i, j, (x.get(i, j) - params.means[j]) / params.stds[j]);
        }
    }
    Ok(out)
}

/// Undo standardization; inverse of [`standardize_apply`].
pub fn standardize_invert(params: &ScalerParams, x: &Matrix) -> Result<Matrix, PipelineError> {
    if x.ncols() != params.means.len() {
        return Err(PipelineError::DimensionMismatch {
            expected: params.means.len(),
            got: x.ncols(),
        });
    }
    let mut out = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            out.set(i, j, x.get(i, j) * params.stds[j] + params.means[j]);
        }
    }
    Ok(out)
}
