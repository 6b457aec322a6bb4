//! Epsilon-insensitive support vector regression with an RBF kernel, solved
//! in the dual by pairwise (SMO-style) coordinate optimization.
//!
//! The dual is handled in the doubled form: variables `a[0..n]` are the
//! upper-tube multipliers and `a[n..2n]` the lower-tube ones, each boxed in
//! `[0, C]`, with implicit labels +1 / -1 and linear terms `eps -/+ y`. The
//! working pair is the maximal violating pair with a second-order gain rule
//! for the partner; convergence is declared when the KKT violation drops to
//! `tol`. Hitting the iteration cap still returns a model, flagged through
//! `converged` / `kkt_violation`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, squared_distance, Matrix};

use super::{ModelError, SvrParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrFit {
    /// Support vectors: the training rows with nonzero dual coefficient.
    pub support_rows: Matrix,
    /// `alpha - alpha*` per support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub kkt_violation: f64,
    pub iterations: usize,
    /// True when the training set was capped by a seeded subsample.
    pub subsampled: bool,
}

impl SvrFit {
    /// Iteration cap was hit with the violation still far from `tol`.
    pub fn convergence_failed(&self, tol: f64) -> bool {
        !self.converged && self.kkt_violation > 10.0 * tol
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (i, beta) in self.dual_coefficients.iter().enumerate() {
            let k = (-self.gamma * squared_distance(self.support_rows.row(i), row)).exp();
            acc += beta * k;
        }
        acc
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect()
    }
}

/// Bounded kernel-row cache with least-recently-used eviction.
struct RowCache {
    rows: Vec<Option<Vec<f64>>>,
    last_used: Vec<u64>,
    resident: Vec<usize>,
    capacity: usize,
    clock: u64,
}

impl RowCache {
    fn new(n: usize) -> Self {
        // Budget roughly 64 MB of kernel rows.
        let capacity = ((64 << 20) / (8 * n.max(1))).clamp(2, n.max(2));
        RowCache {
            rows: vec![None; n],
            last_used: vec![0; n],
            resident: Vec::new(),
            capacity,
            clock: 0,
        }
    }

    fn ensure(&mut self, p: usize, x: &Matrix, gamma: f64) {
        self.clock += 1;
        self.last_used[p] = self.clock;
        if self.rows[p].is_some() {
            return;
        }
        if self.resident.len() >= self.capacity {
            let (pos, &victim) = self
                .resident
                .iter()
                .enumerate()
                .min_by_key(|(_, &r)| self.last_used[r])
                .expect("cache nonempty");
            self.rows[victim] = None;
            self.resident.swap_remove(pos);
        }
        let xp = x.row(p);
        let row: Vec<f64> = (0..x.nrows())
            .map(|q| (-gamma * squared_distance(xp, x.row(q))).exp())
            .collect();
        self.rows[p] = Some(row);
        self.resident.push(p);
    }

    fn row(&self, p: usize) -> &[f64] {
        self.rows[p].as_deref().expect("row ensured")
    }
}

struct SmoOutcome {
    beta: Vec<f64>,
    bias: f64,
    converged: bool,
    violation: f64,
    iterations: usize,
}

fn smo_solve(x: &Matrix, y: &[f64], params: &SvrParams) -> SmoOutcome {
    let n = x.nrows();
    let c = params.c;
    let eps = params.epsilon;
    let tau = 1e-12;

    let sign = |t: usize| -> f64 { if t < n { 1.0 } else { -1.0 } };
    let point = |t: usize| -> usize { if t < n { t } else { t - n } };

    let mut a = vec![0.0_f64; 2 * n];
    let mut grad: Vec<f64> = (0..2 * n)
        .map(|t| if t < n { eps - y[t] } else { eps + y[t - n] })
        .collect();
    let mut cache = RowCache::new(n);

    let in_up = |t: usize, a: &[f64]| -> bool {
        if t < n {
            a[t] < c
        } else {
            a[t] > 0.0
        }
    };
    let in_low = |t: usize, a: &[f64]| -> bool {
        if t < n {
            a[t] > 0.0
        } else {
            a[t] < c
        }
    };

    let mut iterations = 0usize;
    let mut violation = f64::INFINITY;
    let mut converged = false;

    loop {
        // Maximal violating pair: i maximizes -sign(t) G_t over the "up"
        // set, M is the minimum over the "down" set.
        let mut m_val = f64::NEG_INFINITY;
        let mut i_opt: Option<usize> = None;
        let mut big_m = f64::INFINITY;
        for t in 0..2 * n {
            let v = -sign(t) * grad[t];
            if in_up(t, &a) && v > m_val {
                m_val = v;
                i_opt = Some(t);
            }
            if in_low(t, &a) && v < big_m {
                big_m = v;
            }
        }
        violation = m_val - big_m;
        if violation <= params.tol || i_opt.is_none() {
            converged = violation <= params.tol;
            break;
        }
        if iterations >= params.max_iterations {
            break;
        }
        let i = i_opt.expect("checked above");
        let pi = point(i);
        cache.ensure(pi, x, params.gamma);

        // Second-order partner choice: largest gain -b^2/quad among the
        // violating "down" candidates. For the RBF kernel the curvature
        // along either pair direction is 2 - 2 K(pi, pt).
        let mut j_opt: Option<usize> = None;
        let mut best_obj = f64::INFINITY;
        {
            let krow_i = cache.row(pi);
            for t in 0..2 * n {
                if !in_low(t, &a) {
                    continue;
                }
                let grad_diff = m_val + sign(t) * grad[t];
                if grad_diff <= 0.0 {
                    continue;
                }
                let quad = (2.0 - 2.0 * krow_i[point(t)]).max(tau);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj < best_obj {
                    best_obj = obj;
                    j_opt = Some(t);
                }
            }
        }
        let Some(j) = j_opt else {
            break;
        };
        let pj = point(j);
        cache.ensure(pj, x, params.gamma);

        let k_ij = cache.row(pi)[pj];
        let quad = (2.0 - 2.0 * k_ij).max(tau);
        let old_ai = a[i];
        let old_aj = a[j];

        if sign(i) != sign(j) {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }

        let delta_i = a[i] - old_ai;
        let delta_j = a[j] - old_aj;
        if delta_i == 0.0 && delta_j == 0.0 {
            // Numerically stuck pair; treat the current violation as final.
            break;
        }
        let (si, sj) = (sign(i), sign(j));
        {
            let krow_i = cache.row(pi);
            let krow_j = cache.row(pj);
            for t in 0..2 * n {
                let kt = point(t);
                let st = sign(t);
                grad[t] += st * si * krow_i[kt] * delta_i + st * sj * krow_j[kt] * delta_j;
            }
        }
        iterations += 1;
    }

    // beta = alpha - alpha*.
    let beta: Vec<f64> = (0..n).map(|p| a[p] - a[p + n]).collect();

    // Bias from the KKT conditions: every free multiplier pins b exactly at
    // -sign(t) G_t; with none free, the box constraints bracket it.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for t in 0..2 * n {
        let v = -sign(t) * grad[t];
        if a[t] > 0.0 && a[t] < c {
            free_sum += v;
            free_count += 1;
        } else if in_up(t, &a) {
            lower = lower.max(v);
        } else {
            upper = upper.min(v);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (lower + upper) / 2.0
    };

    SmoOutcome {
        beta,
        bias,
        converged,
        violation,
        iterations,
    }
}

pub(crate) fn fit(
    x: &Matrix,
    y: &[f64],
    params: &SvrParams,
    seed: u64,
) -> Result<SvrFit, ModelError> {
    if x.nrows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if params.c <= 0.0 {
        return Err(ModelError::NonPositiveHyperparam {
            name: "C",
            value: params.c,
        });
    }
    if params.gamma <= 0.0 {
        return Err(ModelError::NonPositiveHyperparam {
            name: "gamma",
            value: params.gamma,
        });
    }
    if params.epsilon < 0.0 {
        return Err(ModelError::InvalidHyperparam {
            detail: format!("epsilon must be >= 0, got {}", params.epsilon),
        });
    }

    let n = x.nrows();
    let (x_train, y_train, subsampled) = match params.max_train {
        Some(cap) if n > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks: Vec<usize> = sample(&mut rng, n, cap).into_iter().collect();
            picks.sort_unstable();
            let xs = x.select_rows(&picks);
            let ys: Vec<f64> = picks.iter().map(|&i| y[i]).collect();
            (xs, ys, true)
        }
        _ => (x.clone(), y.to_vec(), false),
    };

    let outcome = smo_solve(&x_train, &y_train, params);

    let sv_indices: Vec<usize> = (0..x_train.nrows())
        .filter(|&p| outcome.beta[p] != 0.0)
        .collect();
    Ok(SvrFit {
        support_rows: x_train.select_rows(&sv_indices),
        dual_coefficients: sv_indices.iter().map(|&p| outcome.beta[p]).collect(),
        bias: outcome.bias,
        gamma: params.gamma,
        epsilon: params.epsilon,
        converged: outcome.converged,
        kkt_violation: outcome.violation,
        iterations: outcome.iterations,
        subsampled,
    })
}

/// Dual objective value for a given coefficient vector; shared with the
/// test-side solver so the two routes can be compared on equal terms.
#[doc(hidden)]
pub fn dual_objective(x: &Matrix, y: &[f64], gamma: f64, eps: f64, beta: &[f64]) -> f64 {
    let n = x.nrows();
    let mut quad = 0.0;
    for p in 0..n {
        for q in 0..n {
            let k = (-gamma * squared_distance(x.row(p), x.row(q))).exp();
            quad += beta[p] * beta[q] * k;
        }
    }
    -0.5 * quad - eps * beta.iter().map(|b| b.abs()).sum::<f64>() + dot(y, beta)
}
