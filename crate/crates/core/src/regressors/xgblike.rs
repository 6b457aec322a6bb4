//! Regularized boosting for squared loss in the second-order style: splits
//! maximize `gain = 0.5 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H+l)]`
//! with gradient sums `G = sum(F - y)` and unit hessians, leaves carry
//! `-G/(H+l)`, and each stage draws seeded row and column subsamples.
//!
//! This is a separate tree builder from the CART used by [`super::gradboost`];
//! with `lambda = 0` and full sampling the two routes must agree stage by
//! stage, which the tests exploit as a cross-check.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

use super::tree::{Tree, TreeNode};
use super::{ModelError, XgbLikeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgbLikeFit {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

/// Best split of one feature by the regularized gain. `pairs` is scratch.
fn scan_feature_gain(
    x: &Matrix,
    grad: &[f64],
    rows: &[u32],
    feature: usize,
    lambda: f64,
    pairs: &mut Vec<(f64, u32)>,
) -> Option<(f64, f64)> {
    pairs.clear();
    pairs.extend(rows.iter().map(|&r| (x.get(r as usize, feature), r)));
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let n = pairs.len();
    let g_total: f64 = pairs.iter().map(|&(_, r)| grad[r as usize]).sum();
    let h_total = n as f64;
    let parent_term = g_total * g_total / (h_total + lambda);

    let mut best: Option<(f64, f64)> = None;
    let mut g_left = 0.0;
    for i in 0..n - 1 {
        g_left += grad[pairs[i].1 as usize];
        let (v, next) = (pairs[i].0, pairs[i + 1].0);
        if v >= next {
            continue;
        }
        let h_left = (i + 1) as f64;
        let g_right = g_total - g_left;
        let h_right = h_total - h_left;
        let gain = 0.5
            * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda)
                - parent_term);
        if gain <= 0.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((g, _)) => gain > g,
        };
        if better {
            let mid = (v + next) * 0.5;
            let threshold = if v < mid && mid < next { mid } else { v };
            best = Some((gain, threshold));
        }
    }
    best
}

/// Grow one gain-criterion tree over `rows`, considering only `features`.
fn grow_gain_tree(
    x: &Matrix,
    grad: &[f64],
    rows: Vec<u32>,
    features: &[usize],
    max_depth: usize,
    lambda: f64,
) -> Tree {
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0, n: 0 }];
    let mut stack: Vec<(usize, Vec<u32>, usize)> = vec![(0, rows, 0)];
    let mut pairs: Vec<(f64, u32)> = Vec::new();

    while let Some((slot, rows, depth)) = stack.pop() {
        let n = rows.len();
        let g: f64 = rows.iter().map(|&r| grad[r as usize]).sum();
        let leaf = TreeNode::Leaf {
            value: -g / (n as f64 + lambda),
            n,
        };
        if depth >= max_depth || n < 2 {
            nodes[slot] = leaf;
            continue;
        }

        let mut best: Option<(f64, usize, f64)> = None;
        for &feature in features {
            if let Some((gain, threshold)) =
                scan_feature_gain(x, grad, &rows, feature, lambda, &mut pairs)
            {
                let better = match best {
                    None => true,
                    Some((g, _, _)) => gain > g,
                };
                if better {
                    best = Some((gain, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            nodes[slot] = leaf;
            continue;
        };

        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        for &r in &rows {
            if x.get(r as usize, feature) <= threshold {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let left = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
        let right = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
        nodes[slot] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Tree { nodes }
}

pub(crate) fn fit(
    x: &Matrix,
    y: &[f64],
    params: &XgbLikeParams,
    seed: u64,
) -> Result<XgbLikeFit, ModelError> {
    let n = x.nrows();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let d = x.ncols();
    let init = y.iter().sum::<f64>() / n as f64;
    let mut current = vec![init; n];
    let mut trees = Vec::with_capacity(params.n_stages);

    for stage in 0..params.n_stages as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stage + 1);

        // Full-rate sampling short-circuits so the reduction to plain
        // boosting uses byte-identical row/column sets.
        let rows: Vec<u32> = if params.subsample < 1.0 {
            let m = ((params.subsample * n as f64).floor() as usize).max(1);
            let mut picks: Vec<u32> = sample(&mut rng, n, m).into_iter().map(|i| i as u32).collect();
            picks.sort_unstable();
            picks
        } else {
            (0..n as u32).collect()
        };
        let features: Vec<usize> = if params.colsample < 1.0 {
            let m = ((params.colsample * d as f64).ceil() as usize).clamp(1, d);
            let mut picks: Vec<usize> = sample(&mut rng, d, m).into_iter().collect();
            picks.sort_unstable();
            picks
        } else {
            (0..d).collect()
        };

        // Gradient of 0.5 (F - y)^2 is F - y; hessian is 1.
        let grad: Vec<f64> = current.iter().zip(y).map(|(f, t)| f - t).collect();
        let tree = grow_gain_tree(x, &grad, rows, &features, params.max_depth, params.lambda);
        for i in 0..n {
            current[i] += params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    Ok(XgbLikeFit {
        init,
        learning_rate: params.learning_rate,
        trees,
    })
}

impl XgbLikeFit {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut out = vec![self.init; x.nrows()];
        for tree in &self.trees {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.learning_rate * tree.predict_row(x.row(i));
            }
        }
        out
    }

    /// Predictions truncated to the first m+1 trees, per stage.
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
