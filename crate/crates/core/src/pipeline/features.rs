//! Correlation-ranked feature selection.

use serde::{Deserialize, Serialize};

use super::table::TimeTable;
use super::PipelineError;

/// Ordered selection of feature columns with their target correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Selected column names, ordered by descending |Pearson r|
    /// (ties broken lexicographically).
    pub selected: Vec<String>,
    /// Pearson r with the target, aligned with `selected`.
    pub correlations: Vec<f64>,
    pub target_name: String,
}

/// Pearson correlation coefficient (population moments).
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    cov / (vx.sqrt() * vy.sqrt())
}

fn dense_column(table: &TimeTable, name: &str) -> Result<Vec<f64>, PipelineError> {
    let col = table
        .column(name)
        .ok_or_else(|| PipelineError::TargetMissing {
            column: name.to_string(),
        })?;
    col.values
        .iter()
        .map(|v| {
            v.ok_or_else(|| PipelineError::MissingValues {
                column: name.to_string(),
            })
        })
        .collect()
}

fn is_constant(v: &[f64]) -> bool {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var <= 1e-24 * (1.0 + mean * mean)
}

/// Rank every non-target column by |Pearson r| with the target and keep the
/// top `k`. Constant columns are dropped before ranking; the table must be
/// fully imputed.
pub fn select_features(
    table: &TimeTable,
    target_name: &str,
    k: usize,
) -> Result<FeatureSpec, PipelineError> {
    let target = dense_column(table, target_name)?;
    if is_constant(&target) {
        return Err(PipelineError::ConstantTarget {
            column: target_name.to_string(),
        });
    }

    let mut ranked: Vec<(String, f64)> = Vec::new();
    for col in table.columns() {
        if col.name == target_name {
            continue;
        }
        let values = dense_column(table, &col.name)?;
        if is_constant(&values) {
            continue;
        }
        ranked.push((col.name.clone(), pearson(&values, &target)));
    }
    if k < 1 || k > ranked.len() {
        return Err(PipelineError::KTooLarge {
            k,
            available: ranked.len(),
        });
    }

    ranked.sort_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .expect("correlations are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(k);

    Ok(FeatureSpec {
        selected: ranked.iter().map(|(n, _)| n.clone()).collect(),
        correlations: ranked.iter().map(|(_, r)| *r).collect(),
        target_name: target_name.to_string(),
    })
}
