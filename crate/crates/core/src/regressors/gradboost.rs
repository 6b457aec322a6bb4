//! Gradient-boosted regression trees for squared loss: start from the target
//! mean, then stagewise fit CART trees to the current residuals, each scaled
//! by the learning rate.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

use super::tree::{grow, FeaturePool, GrowConfig, Tree};
use super::{GradBoostParams, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradBoostFit {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

pub(crate) fn fit(x: &Matrix, y: &[f64], params: &GradBoostParams) -> Result<GradBoostFit, ModelError> {
    let n = x.nrows();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let features: Vec<usize> = (0..x.ncols()).collect();
    let cfg = GrowConfig {
        max_depth: Some(params.max_depth),
        min_samples_leaf: 1,
    };

    let init = y.iter().sum::<f64>() / n as f64;
    let mut current = vec![init; n];
    let mut trees = Vec::with_capacity(params.n_stages);
    for _ in 0..params.n_stages {
        let residuals: Vec<f64> = y.iter().zip(&current).map(|(t, f)| t - f).collect();
        let rows: Vec<u32> = (0..n as u32).collect();
        let tree = grow(x, &residuals, rows, &cfg, FeaturePool::Fixed(&features));
        for i in 0..n {
            current[i] += params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    Ok(GradBoostFit {
        init,
        learning_rate: params.learning_rate,
        trees,
    })
}

impl GradBoostFit {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut out = vec![self.init; x.nrows()];
        for tree in &self.trees {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.learning_rate * tree.predict_row(x.row(i));
            }
        }
        out
    }

    /// Predictions after each stage: element m is the ensemble truncated to
    /// the first m+1 trees. Used by the monotone-loss checks.
    pub fn staged_predict(&self, x: &Matrix) -> Vec<Vec<f64>> {
        let mut current = vec![self.init; x.nrows()];
        let mut out = Vec::with_capacity(self.trees.len());
        for tree in &self.trees {
            for (i, o) in current.iter_mut().enumerate() {
                *o += self.learning_rate * tree.predict_row(x.row(i));
            }
            out.push(current.clone());
        }
        out
    }
}
