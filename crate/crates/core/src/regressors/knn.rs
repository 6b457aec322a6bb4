//! k-nearest-neighbor regression by exhaustive Euclidean scan. At 27
//! standardized dimensions a kd-tree buys nothing, so the model just stores
//! the training set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{squared_distance, Matrix};

use super::{KnnParams, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

/// The memorized training set plus query parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnFit {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub k: usize,
    pub weighting: Weighting,
}

pub(crate) fn fit(x: &Matrix, y: &[f64], params: &KnnParams) -> Result<KnnFit, ModelError> {
    if x.nrows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if params.k > x.nrows() {
        return Err(ModelError::KExceedsN {
            k: params.k,
            n: x.nrows(),
        });
    }
    Ok(KnnFit {
        x: x.clone(),
        y: y.to_vec(),
        k: params.k,
        weighting: params.weighting,
    })
}

impl KnnFit {
    /// Predict one query row.
    ///
    /// Neighbors are the k smallest (distance, train index) pairs, so exact
    /// distance ties resolve to the lower training-row index. Under inverse
    /// distance weighting a zero-distance hit short-circuits to the mean
    /// target of all zero-distance training points.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let n = self.x.nrows();
        let mut dist: Vec<(f64, u32)> = (0..n)
            .map(|i| (squared_distance(self.x.row(i), row), i as u32))
            .collect();

        if matches!(self.weighting, Weighting::InverseDistance) {
            let zero: Vec<u32> = dist
                .iter()
                .filter(|(d, _)| *d == 0.0)
                .map(|&(_, i)| i)
                .collect();
            if !zero.is_empty() {
                return zero.iter().map(|&i| self.y[i as usize]).sum::<f64>() / zero.len() as f64;
            }
        }

        let k = self.k;
        let total = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < n {
            dist.select_nth_unstable_by(k - 1, total);
        }
        let neighbors = &mut dist[..k];
        neighbors.sort_unstable_by(total);

        match self.weighting {
            Weighting::Uniform => {
                neighbors.iter().map(|&(_, i)| self.y[i as usize]).sum::<f64>() / k as f64
            }
            Weighting::InverseDistance => {
                let mut num = 0.0;
                let mut den = 0.0;
                for &(d2, i) in neighbors.iter() {
                    let w = 1.0 / d2.sqrt();
                    num += w * self.y[i as usize];
                    den += w;
                }
                num / den
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect()
    }
}
