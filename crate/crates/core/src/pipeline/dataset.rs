//! The dense feature matrix handed to the models, plus train/test splitting.

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

use super::features::FeatureSpec;
use super::table::TimeTable;
use super::PipelineError;

/// Feature rows, aligned target vector, names, and timestamps.
/// Cells are always finite; the target stays in price units.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub timestamps: Vec<DateTime<Utc>>,
}

impl FeatureMatrix {
    /// Pull the selected columns and the target out of a fully imputed table.
    pub fn assemble(table: &TimeTable, spec: &FeatureSpec) -> Result<Self, PipelineError> {
        let n = table.n_rows();
        let d = spec.selected.len();
        let mut x = Matrix::zeros(n, d);
        for (j, name) in spec.selected.iter().enumerate() {
            let col = table
                .column(name)
                .ok_or_else(|| PipelineError::TargetMissing {
                    column: name.clone(),
                })?;
            for i in 0..n {
                let v = col.values[i].ok_or_else(|| PipelineError::MissingValues {
                    column: name.clone(),
                })?;
                if !v.is_finite() {
                    return Err(PipelineError::NonFinite {
                        column: name.clone(),
                        row: i,
                    });
                }
                x.set(i, j, v);
            }
        }
        let target =
            table
                .column(&spec.target_name)
                .ok_or_else(|| PipelineError::TargetMissing {
                    column: spec.target_name.clone(),
                })?;
        let y = target
            .values
            .iter()
            .map(|v| {
                v.ok_or_else(|| PipelineError::MissingValues {
                    column: spec.target_name.clone(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(FeatureMatrix {
            x,
            y,
            feature_names: spec.selected.clone(),
            timestamps: table.timestamps().to_vec(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// New matrix holding the given rows, preserving their order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            timestamps: indices.iter().map(|&i| self.timestamps[i]).collect(),
        }
    }

    /// Replace the design matrix (e.g. after standardization), keeping
    /// target, names, and timestamps.
    pub fn with_x(&self, x: Matrix) -> FeatureMatrix {
        assert_eq!(x.nrows(), self.n_rows());
        FeatureMatrix {
            x,
            y: self.y.clone(),
            feature_names: self.feature_names.clone(),
            timestamps: self.timestamps.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Chronological,
    Random,
}

fn split_sizes(n: usize, train_fraction: f64) -> Result<usize, PipelineError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PipelineError::BadFraction {
            fraction: train_fraction,
        });
    }
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(PipelineError::DegenerateSplit {
            n_train,
            n_test: n - n_train,
        });
    }
    Ok(n_train)
}

/// First `floor(n * fraction)` rows train, remainder test.
pub fn chronological_split(
    fm: &FeatureMatrix,
    train_fraction: f64,
) -> Result<(FeatureMatrix, FeatureMatrix), PipelineError> {
    let n = fm.n_rows();
    let n_train = split_sizes(n, train_fraction)?;
    let train_idx: Vec<usize> = (0..n_train).collect();
    let test_idx: Vec<usize> = (n_train..n).collect();
    Ok((fm.select_rows(&train_idx), fm.select_rows(&test_idx)))
}

/// Seeded uniform split; each side keeps its rows in original order.
pub fn random_split(
    fm: &FeatureMatrix,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix), PipelineError> {
    let n = fm.n_rows();
    let n_train = split_sizes(n, train_fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut train_idx: Vec<usize> = indices[..n_train].to_vec();
    let mut test_idx: Vec<usize> = indices[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((fm.select_rows(&train_idx), fm.select_rows(&test_idx)))
}

pub fn split(
    fm: &FeatureMatrix,
    mode: SplitMode,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix), PipelineError> {
    match mode {
        SplitMode::Chronological => chronological_split(fm, train_fraction),
        SplitMode::Random => random_split(fm, train_fraction, seed),
    }
}
