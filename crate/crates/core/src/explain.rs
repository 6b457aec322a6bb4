//! Local surrogate explanations: perturb around one instance, weight by a
//! Gaussian proximity kernel, predict with the black box, fit a weighted
//! ridge surrogate, and report signed per-feature contributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, lstsq, Matrix};
use crate::regressors::{FittedModel, ModelError};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("need at least {needed} perturbation samples for {d} features, got {got}")]
    TooFewSamples { needed: usize, got: usize, d: usize },
    #[error("{detail}")]
    InvalidConfig { detail: String },
    #[error("all kernel weights vanished; the neighborhood is degenerate")]
    DegenerateWeights,
    #[error("instance has {got} features but the model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("surrogate solve failed: column {column} is degenerate")]
    SurrogateSolve { column: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs for one explanation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub n_samples: usize,
    /// Gaussian kernel width; `None` means the `0.75 * sqrt(d)` heuristic.
    pub kernel_width: Option<f64>,
    /// Perturbation scale as a multiple of each feature's training std.
    pub perturb_scale: f64,
    /// L2 penalty on the surrogate coefficients (intercept unpenalized).
    pub surrogate_l2: f64,
    pub seed: u64,
    /// Render threshold conditions from training quartiles.
    pub discretize: bool,
    /// Contributions reported (the surrogate itself uses every feature).
    pub top_k: usize,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 300,
            kernel_width: None,
            perturb_scale: 1.0,
            surrogate_l2: 0.01,
            seed: 0,
            discretize: true,
            top_k: 10,
        }
    }
}

impl LimeConfig {
    pub fn resolve_kernel_width(&self, d: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (d as f64).sqrt())
    }

    fn validate(&self, d: usize) -> Result<(), ExplainError> {
        if self.n_samples < d + 2 {
            return Err(ExplainError::TooFewSamples {
                needed: d + 2,
                got: self.n_samples,
                d,
            });
        }
        if self.perturb_scale <= 0.0 {
            return Err(ExplainError::InvalidConfig {
                detail: format!("perturb_scale must be > 0, got {}", self.perturb_scale),
            });
        }
        if self.resolve_kernel_width(d) <= 0.0 {
            return Err(ExplainError::InvalidConfig {
                detail: "kernel_width must be > 0".into(),
            });
        }
        if self.surrogate_l2 < 0.0 {
            return Err(ExplainError::InvalidConfig {
                detail: format!("surrogate_l2 must be >= 0, got {}", self.surrogate_l2),
            });
        }
        Ok(())
    }
}

/// Per-feature training statistics the explainer needs: stds for the
/// perturbation scale and quartiles for the rendered conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureStats {
    pub stds: Vec<f64>,
    pub quartiles: Vec<[f64; 3]>,
}

/// Linear-interpolation quantile on sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

impl FeatureStats {
    pub fn from_matrix(x: &Matrix) -> FeatureStats {
        let n = x.nrows();
        let d = x.ncols();
        let mut stds = Vec::with_capacity(d);
        let mut quartiles = Vec::with_capacity(d);
        for j in 0..d {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            stds.push(var.sqrt());
            let mut sorted = col;
            sorted.sort_by(f64::total_cmp);
            quartiles.push([
                quantile(&sorted, 0.25),
                quantile(&sorted, 0.50),
                quantile(&sorted, 0.75),
            ]);
        }
        FeatureStats { stds, quartiles }
    }
}

/// One reported feature: signed surrogate weight plus the optional
/// quartile-bin condition the instance satisfies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: String,
    pub weight: f64,
    pub condition: Option<String>,
}

/// The full explanation of one prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub instance: Vec<f64>,
    /// Black-box prediction at the instance.
    pub predicted: f64,
    pub intercept: f64,
    /// Full surrogate coefficient vector, one entry per feature.
    pub coefficients: Vec<f64>,
    /// Top contributions by |weight|, at most `top_k`.
    pub contributions: Vec<Contribution>,
    /// Kernel-weighted R-squared of the surrogate against the black box
    /// over the perturbation set.
    pub local_fidelity: f64,
}

/// Draw the perturbation neighborhood: row 0 is the instance itself, the
/// rest are `x + eps` with independent Gaussian components of std
/// `perturb_scale * std_j`.
pub fn perturb_samples(x: &[f64], stds: &[f64], cfg: &LimeConfig) -> Matrix {
    let d = x.len();
    assert_eq!(stds.len(), d, "std vector must match the instance");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Matrix::zeros(cfg.n_samples, d);
    for j in 0..d {
        out.set(0, j, x[j]);
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for i in 1..cfg.n_samples {
        for j in 0..d {
            let eps = normal.sample(&mut rng) * cfg.perturb_scale * stds[j];
            out.set(i, j, x[j] + eps);
        }
    }
    out
}

/// Gaussian proximity weights `exp(-D(x, z)^2 / sigma^2)`, Euclidean `D`.
pub fn kernel_weights(x: &[f64], samples: &Matrix, sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0);
    (0..samples.nrows())
        .map(|i| {
            let d2 = crate::linalg::squared_distance(x, samples.row(i));
            (-d2 / (sigma * sigma)).exp()
        })
        .collect()
}

/// Weighted ridge surrogate: minimizes
/// `sum_i w_i (f(z_i) - c - b.z_i)^2 + l2 ||b||^2` with the intercept
/// unpenalized. Weights are normalized to sum 1 first, so scaling them all
/// by a constant cannot change the solution. Returns
/// `(intercept, coefficients, local_fidelity)`.
pub fn fit_surrogate(
    samples: &Matrix,
    black_box_preds: &[f64],
    weights: &[f64],
    l2: f64,
) -> Result<(f64, Vec<f64>, f64), ExplainError> {
    let n = samples.nrows();
    let d = samples.ncols();
    assert_eq!(black_box_preds.len(), n);
    assert_eq!(weights.len(), n);
    let w_sum: f64 = weights.iter().sum();
    if !(w_sum > 1e-300) {
        return Err(ExplainError::DegenerateWeights);
    }
    let w: Vec<f64> = weights.iter().map(|v| v / w_sum).collect();

    // Weighted centering keeps the intercept out of the penalty.
    let mut x_mean = vec![0.0; d];
    let mut f_mean = 0.0;
    for i in 0..n {
        for j in 0..d {
            x_mean[j] += w[i] * samples.get(i, j);
        }
        f_mean += w[i] * black_box_preds[i];
    }

    let mut a = Matrix::zeros(0, d);
    let mut b = Vec::with_capacity(n + d);
    for i in 0..n {
        let sw = w[i].sqrt();
        let row: Vec<f64> = (0..d).map(|j| sw * (samples.get(i, j) - x_mean[j])).collect();
        a.push_row(&row);
        b.push(sw * (black_box_preds[i] - f_mean));
    }
    if l2 > 0.0 {
        let s = l2.sqrt();
        for j in 0..d {
            let mut row = vec![0.0; d];
            row[j] = s;
            a.push_row(&row);
            b.push(0.0);
        }
    }
    let coefficients =
        lstsq(&a, &b).map_err(|e| ExplainError::SurrogateSolve { column: e.column })?;
    let intercept = f_mean - dot(&coefficients, &x_mean);

    // Weighted R^2 of the surrogate against the black box.
    let mut sse = 0.0;
    let mut var = 0.0;
    for i in 0..n {
        let g = intercept + dot(&coefficients, samples.row(i));
        sse += w[i] * (black_box_preds[i] - g).powi(2);
        var += w[i] * (black_box_preds[i] - f_mean).powi(2);
    }
    let local_fidelity = if var > 0.0 { 1.0 - sse / var } else { 1.0 };
    Ok((intercept, coefficients, local_fidelity))
}

/// Locate `value` in the feature's quartile bins and render the matching
/// threshold condition, e.g. `rain_3h <= -0.06` or `wind_speed > 0.50`.
fn condition_string(name: &str, value: f64, q: &[f64; 3]) -> String {
    if value <= q[0] {
        format!("{name} <= {:.2}", q[0])
    } else if value <= q[1] {
        format!("{:.2} < {name} <= {:.2}", q[0], q[1])
    } else if value <= q[2] {
        format!("{:.2} < {name} <= {:.2}", q[1], q[2])
    } else {
        format!("{name} > {:.2}", q[2])
    }
}

/// Explain one prediction of `model` at `x`: perturb, predict, weight, fit
/// the surrogate, then rank contributions by |weight|.
pub fn explain(
    model: &FittedModel,
    x: &[f64],
    stats: &FeatureStats,
    cfg: &LimeConfig,
) -> Result<Explanation, ExplainError> {
    let d = model.train_feature_names.len();
    if x.len() != d {
        return Err(ExplainError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if stats.stds.len() != d {
        return Err(ExplainError::InvalidConfig {
            detail: format!(
                "feature stats cover {} features, model has {d}",
                stats.stds.len()
            ),
        });
    }
    cfg.validate(d)?;

    let samples = perturb_samples(x, &stats.stds, cfg);
    let preds = model.predict(&samples)?;
    let sigma = cfg.resolve_kernel_width(d);
    let weights = kernel_weights(x, &samples, sigma);
    let (intercept, coefficients, local_fidelity) =
        fit_surrogate(&samples, &preds, &weights, cfg.surrogate_l2)?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        coefficients[b]
            .abs()
            .total_cmp(&coefficients[a].abs())
            .then(a.cmp(&b))
    });
    let contributions = order
        .iter()
        .take(cfg.top_k)
        .map(|&j| Contribution {
            feature: model.train_feature_names[j].clone(),
            weight: coefficients[j],
            condition: cfg
                .discretize
                .then(|| condition_string(&model.train_feature_names[j], x[j], &stats.quartiles[j])),
        })
        .collect();

    Ok(Explanation {
        instance: x.to_vec(),
        predicted: preds[0],
        intercept,
        coefficients,
        contributions,
        local_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::{LinearFit, ModelHyperparams, ModelParams, RegressorSpec};

    fn linear_black_box(coefficients: Vec<f64>, intercept: f64) -> FittedModel {
        let d = coefficients.len();
        FittedModel {
            spec: RegressorSpec::new(ModelHyperparams::Linear, 0),
            train_feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            params: ModelParams::Linear(LinearFit {
                coefficients,
                intercept,
            }),
        }
    }

    fn unit_stats(d: usize) -> FeatureStats {
        FeatureStats {
            stds: vec![1.0; d],
            quartiles: vec![[-0.67, 0.0, 0.67]; d],
        }
    }

    #[test]
    fn perturbations_are_seeded_and_anchored() {
        let cfg = LimeConfig {
            n_samples: 300,
            seed: 5,
            ..Default::default()
        };
        let x = vec![1.0, -2.0, 0.5];
        let stds = vec![1.0, 2.0, 0.1];
        let a = perturb_samples(&x, &stds, &cfg);
        let b = perturb_samples(&x, &stds, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.row(0), &x[..]);

        // Column means stay within 3 standard errors of the anchor.
        for j in 0..3 {
            let mean: f64 = (0..a.nrows()).map(|i| a.get(i, j)).sum::<f64>() / a.nrows() as f64;
            let se = stds[j] / (a.nrows() as f64).sqrt();
            assert!(
                (mean - x[j]).abs() <= 3.0 * se,
                "column {j} drifted: {mean} vs {}",
                x[j]
            );
        }
    }

    #[test]
    fn tiny_perturb_scale_degenerates_to_the_instance() {
        let cfg = LimeConfig {
            n_samples: 50,
            perturb_scale: 1e-12,
            ..Default::default()
        };
        let x = vec![0.3, -0.7];
        let m = perturb_samples(&x, &[1.0, 1.0], &cfg);
        for i in 0..m.nrows() {
            for j in 0..2 {
                assert!((m.get(i, j) - x[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn kernel_weight_values() {
        let x = vec![0.0, 0.0];
        let samples = Matrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let w = kernel_weights(&x, &samples, 2.0);
        assert_eq!(w[0], 1.0);
        // D = sigma -> weight e^{-1}.
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((w[1] - 0.36787944117144233).abs() < 1e-12);
    }

    #[test]
    fn doubling_sigma_raises_every_offinstance_weight() {
        let cfg = LimeConfig {
            n_samples: 64,
            seed: 8,
            ..Default::default()
        };
        let x = vec![0.0; 4];
        let samples = perturb_samples(&x, &[1.0; 4], &cfg);
        let w1 = kernel_weights(&x, &samples, 1.0);
        let w2 = kernel_weights(&x, &samples, 2.0);
        for i in 1..samples.nrows() {
            assert!(w2[i] > w1[i]);
        }
    }

    #[test]
    fn surrogate_recovers_linear_black_box() {
        let cfg = LimeConfig {
            n_samples: 300,
            surrogate_l2: 1e-8,
            seed: 3,
            ..Default::default()
        };
        let x = vec![0.5, -0.25];
        let samples = perturb_samples(&x, &[1.0, 1.0], &cfg);
        let preds: Vec<f64> = (0..samples.nrows())
            .map(|i| 2.0 * samples.get(i, 0) - samples.get(i, 1) + 3.0)
            .collect();
        let weights = kernel_weights(&x, &samples, cfg.resolve_kernel_width(2));
        let (c, beta, fidelity) = fit_surrogate(&samples, &preds, &weights, cfg.surrogate_l2).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-4);
        assert!((beta[1] + 1.0).abs() < 1e-4);
        assert!((c - 3.0).abs() < 1e-4);
        assert!(fidelity > 0.9999);
    }

    #[test]
    fn uniform_weights_zero_penalty_is_ols() {
        let samples = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
        ]);
        let preds = vec![1.0, 3.0, 0.0, 2.1, 1.4];
        let w = vec![1.0; 5];
        let (c, beta, _) = fit_surrogate(&samples, &preds, &w, 0.0).unwrap();
        // OLS oracle through the shared QR path with an intercept column.
        let a = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0, 0.5, 0.5],
        ]);
        let sol = crate::linalg::lstsq(&a, &preds).unwrap();
        assert!((c - sol[0]).abs() < 1e-10);
        assert!((beta[0] - sol[1]).abs() < 1e-10);
        assert!((beta[1] - sol[2]).abs() < 1e-10);
    }

    #[test]
    fn huge_penalty_collapses_to_weighted_mean() {
        // Hand-solved 3-sample system: with l2 -> infinity the coefficients
        // vanish and the intercept is the weighted mean of f(z):
        // (0.5*2 + 0.25*6 + 0.25*10) / 1.0 = 5.0.
        let samples = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let preds = vec![2.0, 6.0, 10.0];
        let weights = vec![0.5, 0.25, 0.25];
        let (c, beta, _) = fit_surrogate(&samples, &preds, &weights, 1e9).unwrap();
        assert!(beta[0].abs() < 1e-6);
        assert!((c - 5.0).abs() < 1e-6);
    }

    #[test]
    fn weight_rescaling_leaves_solution_unchanged() {
        let cfg = LimeConfig {
            n_samples: 100,
            seed: 12,
            ..Default::default()
        };
        let x = vec![0.0, 1.0];
        let samples = perturb_samples(&x, &[1.0, 1.0], &cfg);
        let preds: Vec<f64> = (0..samples.nrows())
            .map(|i| samples.get(i, 0) * 1.5 - samples.get(i, 1))
            .collect();
        let weights = kernel_weights(&x, &samples, 1.0);
        let scaled: Vec<f64> = weights.iter().map(|w| w * 713.0).collect();
        let (c1, b1, f1) = fit_surrogate(&samples, &preds, &weights, 0.01).unwrap();
        let (c2, b2, f2) = fit_surrogate(&samples, &preds, &scaled, 0.01).unwrap();
        assert!((c1 - c2).abs() < 1e-10);
        assert!((f1 - f2).abs() < 1e-10);
        for (a, b) in b1.iter().zip(&b2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_weights_rejected() {
        let samples = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let preds = vec![0.0, 1.0, 2.0];
        let err = fit_surrogate(&samples, &preds, &[0.0, 0.0, 0.0], 0.01).unwrap_err();
        assert!(matches!(err, ExplainError::DegenerateWeights));
    }

    #[test]
    fn explaining_a_linear_model_matches_coefficient_signs() {
        let model = linear_black_box(vec![2.0, -1.5, 0.25], 4.0);
        let cfg = LimeConfig {
            seed: 2,
            ..Default::default()
        };
        let x = vec![0.2, -0.4, 1.0];
        let e = explain(&model, &x, &unit_stats(3), &cfg).unwrap();
        assert_eq!(e.contributions.len(), 3);
        for c in &e.contributions {
            let j = model
                .train_feature_names
                .iter()
                .position(|n| *n == c.feature)
                .unwrap();
            let true_coef = [2.0, -1.5, 0.25][j];
            assert_eq!(c.weight.signum(), true_coef.signum());
        }
        // Contributions are ordered by |weight| and the largest is f0.
        assert_eq!(e.contributions[0].feature, "f0");
        assert!(e.local_fidelity > 0.99);
        // Completeness over the full feature set: intercept + beta.x is the
        // surrogate prediction at x, built from the same coefficients.
        let g = e.intercept + dot(&e.coefficients, &x);
        let direct: f64 = e.intercept
            + e.coefficients
                .iter()
                .zip(&x)
                .map(|(b, v)| b * v)
                .sum::<f64>();
        assert_eq!(g, direct);
    }

    #[test]
    fn constant_black_box_yields_null_contributions() {
        let model = linear_black_box(vec![0.0, 0.0], 7.0);
        let cfg = LimeConfig {
            seed: 4,
            ..Default::default()
        };
        let e = explain(&model, &[0.1, 0.2], &unit_stats(2), &cfg).unwrap();
        assert!((e.intercept - 7.0).abs() < 1e-9);
        assert!((e.predicted - 7.0).abs() < 1e-12);
        for c in &e.contributions {
            assert!(c.weight.abs() < 1e-9);
        }
        assert_eq!(e.local_fidelity, 1.0);
    }

    #[test]
    fn same_seed_same_explanation() {
        let model = linear_black_box(vec![1.0, 2.0], 0.0);
        let cfg = LimeConfig {
            seed: 11,
            ..Default::default()
        };
        let a = explain(&model, &[0.0, 0.0], &unit_stats(2), &cfg).unwrap();
        let b = explain(&model, &[0.0, 0.0], &unit_stats(2), &cfg).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.local_fidelity, b.local_fidelity);
    }

    #[test]
    fn condition_strings_follow_quartile_bins() {
        let q = [-0.5, 0.0, 0.5];
        assert_eq!(condition_string("rain_3h", -0.8, &q), "rain_3h <= -0.50");
        assert_eq!(
            condition_string("temp", -0.2, &q),
            "-0.50 < temp <= 0.00"
        );
        assert_eq!(condition_string("temp", 0.3, &q), "0.00 < temp <= 0.50");
        assert_eq!(condition_string("wind_speed", 0.9, &q), "wind_speed > 0.50");
    }

    #[test]
    fn too_few_samples_rejected() {
        let model = linear_black_box(vec![1.0; 5], 0.0);
        let cfg = LimeConfig {
            n_samples: 4,
            ..Default::default()
        };
        let err = explain(&model, &[0.0; 5], &unit_stats(5), &cfg).unwrap_err();
        assert!(matches!(err, ExplainError::TooFewSamples { .. }));
    }

    #[test]
    fn top_k_truncates_contributions() {
        let model = linear_black_box(vec![5.0, 4.0, 3.0, 2.0, 1.0], 0.0);
        let cfg = LimeConfig {
            top_k: 2,
            seed: 6,
            ..Default::default()
        };
        let e = explain(&model, &[0.0; 5], &unit_stats(5), &cfg).unwrap();
        assert_eq!(e.contributions.len(), 2);
        assert_eq!(e.coefficients.len(), 5);
        assert_eq!(e.contributions[0].feature, "f0");
        assert_eq!(e.contributions[1].feature, "f1");
    }
}
