//! Random forest: bootstrap-sampled CART trees averaged uniformly, with
//! per-split (or per-tree) feature subsampling.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

use super::tree::{grow, FeaturePool, GrowConfig, Tree};
use super::{FeatureSampling, ForestParams, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestFit {
    pub trees: Vec<Tree>,
}

/// Each tree draws from its own ChaCha stream, so results do not depend on
/// thread scheduling.
fn tree_rng(seed: u64, tree_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index + 1);
    rng
}

pub(crate) fn fit(
    x: &Matrix,
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestFit, ModelError> {
    let n = x.nrows();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let d = x.ncols();
    let m = ((params.feature_ratio * d as f64).ceil() as usize).clamp(1, d);
    let all_features: Vec<usize> = (0..d).collect();
    let cfg = GrowConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };

    let trees: Vec<Tree> = (0..params.n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let rows: Vec<u32> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n) as u32).collect()
            } else {
                (0..n as u32).collect()
            };
            match params.feature_sampling {
                FeatureSampling::PerSplit => grow(
                    x,
                    y,
                    rows,
                    &cfg,
                    FeaturePool::SampledPerSplit {
                        features: &all_features,
                        m,
                        rng: &mut rng,
                    },
                ),
                FeatureSampling::PerTree => {
                    let mut picks: Vec<usize> =
                        sample(&mut rng, d, m).into_iter().collect();
                    picks.sort_unstable();
                    grow(x, y, rows, &cfg, FeaturePool::Fixed(&picks))
                }
            }
        })
        .collect();

    Ok(ForestFit { trees })
}

impl ForestFit {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; x.nrows()];
        // Accumulate in tree order for bit-reproducible sums.
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.predict(x)) {
                *o += p;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= k);
        out
    }
}
