//! CART regression tree: greedy best split by sum-of-squared-error decrease,
//! candidate thresholds at midpoints between consecutive distinct sorted
//! values. Nodes live in an arena so deep trees never recurse.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

use super::{ModelError, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        n: usize,
    },
    /// `x[feature] <= threshold` goes left, `>` goes right.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Index-linked tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    /// Depth of the deepest node (root = 0); for the depth-bound invariant.
    pub fn max_node_depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, depth)) = stack.pop() {
            deepest = deepest.max(depth);
            if let TreeNode::Split { left, right, .. } = &self.nodes[at] {
                stack.push((*left, depth + 1));
                stack.push((*right, depth + 1));
            }
        }
        deepest
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Growth bounds shared by every tree consumer (standalone, forest, boosting).
#[derive(Debug, Clone)]
pub struct GrowConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

/// Per-split candidate feature choice.
pub(crate) enum FeaturePool<'a> {
    /// All of the listed features at every split.
    Fixed(&'a [usize]),
    /// Sample `m` of the listed features (without replacement) at each split.
    SampledPerSplit {
        features: &'a [usize],
        m: usize,
        rng: &'a mut ChaCha8Rng,
    },
}

struct BestSplit {
    decrease: f64,
    feature: usize,
    threshold: f64,
    /// Row count that goes left.
    n_left: usize,
}

/// Scan one feature for the best SSE-decrease split, honoring min_samples_leaf.
/// `pairs` is scratch space. Ties within a feature keep the smaller threshold
/// because the scan is in ascending value order and comparisons are strict.
fn scan_feature(
    x: &Matrix,
    y: &[f64],
    rows: &[u32],
    feature: usize,
    min_leaf: usize,
    pairs: &mut Vec<(f64, u32)>,
) -> Option<(f64, f64, usize)> {
    pairs.clear();
    pairs.extend(rows.iter().map(|&r| (x.get(r as usize, feature), r)));
    // Total order on (value, row index) keeps the float accumulation order
    // platform- and shuffle-independent.
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let n = pairs.len();
    let total: f64 = pairs.iter().map(|&(_, r)| y[r as usize]).sum();
    let nf = n as f64;
    let parent_term = total * total / nf;

    let mut best: Option<(f64, f64, usize)> = None;
    let mut left_sum = 0.0;
    for i in 0..n - 1 {
        left_sum += y[pairs[i].1 as usize];
        let (v, next) = (pairs[i].0, pairs[i + 1].0);
        if v >= next {
            continue; // same value group, no boundary here
        }
        let n_left = i + 1;
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let right_sum = total - left_sum;
        let decrease = left_sum * left_sum / n_left as f64
            + right_sum * right_sum / n_right as f64
            - parent_term;
        if decrease <= 0.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((d, _, _)) => decrease > d,
        };
        if better {
            let mid = (v + next) * 0.5;
            // Guard against the midpoint rounding onto the right value,
            // which would pull that whole group to the wrong side.
            let threshold = if v < mid && mid < next { mid } else { v };
            best = Some((decrease, threshold, n_left));
        }
    }
    best.map(|(d, t, nl)| (d, t, nl))
}

fn node_mean(y: &[f64], rows: &[u32]) -> f64 {
    rows.iter().map(|&r| y[r as usize]).sum::<f64>() / rows.len() as f64
}

fn is_pure(y: &[f64], rows: &[u32]) -> bool {
    let first = y[rows[0] as usize];
    rows.iter().all(|&r| y[r as usize] == first)
}

/// Grow a CART tree over the given rows (indices may repeat for bootstrap
/// samples). Iterative with an explicit stack; children are processed
/// left-first so any per-split RNG draws happen in a fixed order.
pub(crate) fn grow(
    x: &Matrix,
    y: &[f64],
    rows: Vec<u32>,
    cfg: &GrowConfig,
    mut pool: FeaturePool<'_>,
) -> Tree {
    assert!(!rows.is_empty());
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0, n: 0 }];
    let mut stack: Vec<(usize, Vec<u32>, usize)> = vec![(0, rows, 0)];
    let mut pairs: Vec<(f64, u32)> = Vec::new();
    let mut sampled: Vec<usize> = Vec::new();

    while let Some((slot, rows, depth)) = stack.pop() {
        let n = rows.len();
        let mean = node_mean(y, &rows);
        let depth_stop = cfg.max_depth.is_some_and(|d| depth >= d);
        if depth_stop || n < 2 * cfg.min_samples_leaf || is_pure(y, &rows) {
            nodes[slot] = TreeNode::Leaf { value: mean, n };
            continue;
        }

        let candidates: &[usize] = match &mut pool {
            FeaturePool::Fixed(features) => features,
            FeaturePool::SampledPerSplit { features, m, rng } => {
                let mut picks: Vec<usize> = sample(*rng, features.len(), (*m).min(features.len()))
                    .into_iter()
                    .map(|i| features[i])
                    .collect();
                picks.sort_unstable();
                sampled = picks;
                &sampled
            }
        };

        let mut best: Option<BestSplit> = None;
        for &feature in candidates {
            if let Some((decrease, threshold, n_left)) =
                scan_feature(x, y, &rows, feature, cfg.min_samples_leaf, &mut pairs)
            {
                let better = match &best {
                    None => true,
                    // Ties: lowest feature index wins; candidates iterate in
                    // ascending feature order so strict > keeps the earlier.
                    Some(b) => decrease > b.decrease,
                };
                if better {
                    best = Some(BestSplit {
                        decrease,
                        feature,
                        threshold,
                        n_left,
                    });
                }
            }
        }

        let Some(split) = best else {
            nodes[slot] = TreeNode::Leaf { value: mean, n };
            continue;
        };

        let mut left_rows = Vec::with_capacity(split.n_left);
        let mut right_rows = Vec::with_capacity(n - split.n_left);
        for &r in &rows {
            if x.get(r as usize, split.feature) <= split.threshold {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        debug_assert_eq!(left_rows.len(), split.n_left);

        let left = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
        let right = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
        nodes[slot] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Tree { nodes }
}

/// Standalone decision-tree model.
pub(crate) fn fit_tree(x: &Matrix, y: &[f64], params: &TreeParams) -> Result<Tree, ModelError> {
    if x.nrows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let features: Vec<usize> = (0..x.ncols()).collect();
    let rows: Vec<u32> = (0..x.nrows() as u32).collect();
    Ok(grow(
        x,
        y,
        rows,
        &GrowConfig {
            max_depth: Some(params.max_depth),
            min_samples_leaf: params.min_samples_leaf,
        },
        FeaturePool::Fixed(&features),
    ))
}
