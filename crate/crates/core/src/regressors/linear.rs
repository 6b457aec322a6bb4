//! Ordinary least squares and ridge regression, both solved through a
//! Householder QR factorization rather than the normal equations. The
//! intercept is handled by centering, which also keeps it unpenalized
//! under ridge.

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, lstsq, Matrix};

use super::ModelError;

/// Coefficient vector plus intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| self.intercept + dot(x.row(i), &self.coefficients))
            .collect()
    }
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| (0..x.nrows()).map(|i| x.get(i, j)).sum::<f64>() / n)
        .collect()
}

fn centered(x: &Matrix, means: &[f64]) -> Matrix {
    let mut c = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            c.set(i, j, x.get(i, j) - means[j]);
        }
    }
    c
}

/// OLS with intercept. Exactly collinear features surface as `RankDeficient`;
/// callers may fall back to ridge.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<LinearFit, ModelError> {
    let n = x.nrows();
    let d = x.ncols();
    if n < d + 1 {
        return Err(ModelError::TooFewSamples { needed: d + 1, n, d });
    }
    solve_centered(x, y, 0.0)
}

/// Ridge with intercept: minimizes `||y - Xw - b||^2 + alpha ||w||^2` with
/// the intercept left unpenalized. Defaults to `alpha = 0.1` upstream.
pub fn fit_ridge(x: &Matrix, y: &[f64], alpha: f64) -> Result<LinearFit, ModelError> {
    if alpha < 0.0 {
        return Err(ModelError::InvalidHyperparam {
            detail: format!("alpha must be >= 0, got {alpha}"),
        });
    }
    if x.nrows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    solve_centered(x, y, alpha)
}

/// Shared path: center X and y, append `sqrt(alpha) I` rows when alpha > 0,
/// QR-solve, then recover the intercept from the means.
fn solve_centered(x: &Matrix, y: &[f64], alpha: f64) -> Result<LinearFit, ModelError> {
    let n = x.nrows();
    let d = x.ncols();
    let x_means = column_means(x);
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let mut a = centered(x, &x_means);
    let mut b: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    if alpha > 0.0 {
        let s = alpha.sqrt();
        for j in 0..d {
            let mut row = vec![0.0; d];
            row[j] = s;
            a.push_row(&row);
            b.push(0.0);
        }
    }

    // Centering maps any constant column to zero, so exact collinearity
    // (including constants) is reported through the QR diagonal.
    let coefficients = lstsq(&a, &b).map_err(|e| ModelError::RankDeficient { column: e.column })?;
    let intercept = y_mean - dot(&coefficients, &x_means);
    Ok(LinearFit {
        coefficients,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_linear_recovery() {
        // y = 3x + 1 on 50 points.
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.25]).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] + 1.0).collect();
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-8);
        assert!((fit.intercept - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let x = Matrix::from_rows(&rows);
        let y = vec![7.0; 10];
        let fit = fit_ols(&x, &y).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-10));
        assert!((fit.intercept - 7.0).abs() < 1e-10);
    }

    fn noisy_fixture(seed: u64) -> (Matrix, Vec<f64>) {
        // y = 2 x1 - x2 + noise(sigma = 0.01), n = 1000.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 2.0 * r[0] - r[1] + noise.sample(&mut rng))
            .collect();
        (Matrix::from_rows(&rows), y)
    }

    /// Independent least-squares oracle: normal equations solved by Gaussian
    /// elimination with partial pivoting (a different route than QR).
    fn normal_equations_oracle(x: &Matrix, y: &[f64]) -> Vec<f64> {
        let n = x.nrows();
        let d = x.ncols() + 1; // with intercept column
        let mut ata = vec![vec![0.0; d]; d];
        let mut atb = vec![0.0; d];
        let aug_row = |i: usize| -> Vec<f64> {
            let mut r = vec![1.0];
            r.extend_from_slice(x.row(i));
            r
        };
        for i in 0..n {
            let r = aug_row(i);
            for a in 0..d {
                atb[a] += r[a] * y[i];
                for b in 0..d {
                    ata[a][b] += r[a] * r[b];
                }
            }
        }
        // Gaussian elimination.
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&a, &b| ata[a][col].abs().partial_cmp(&ata[b][col].abs()).unwrap())
                .unwrap();
            ata.swap(col, pivot);
            atb.swap(col, pivot);
            let p = ata[col][col];
            for r in col + 1..d {
                let f = ata[r][col] / p;
                for c in col..d {
                    ata[r][c] -= f * ata[col][c];
                }
                atb[r] -= f * atb[col];
            }
        }
        let mut w = vec![0.0; d];
        for r in (0..d).rev() {
            let mut s = atb[r];
            for c in r + 1..d {
                s -= ata[r][c] * w[c];
            }
            w[r] = s / ata[r][r];
        }
        w // [intercept, coefficients...]
    }

    #[test]
    fn recovers_noisy_coefficients_and_matches_oracle() {
        let (x, y) = noisy_fixture(3);
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 0.01);
        assert!((fit.coefficients[1] + 1.0).abs() < 0.01);

        let oracle = normal_equations_oracle(&x, &y);
        assert!((fit.intercept - oracle[0]).abs() < 1e-6);
        assert!((fit.coefficients[0] - oracle[1]).abs() < 1e-6);
        assert!((fit.coefficients[1] - oracle[2]).abs() < 1e-6);
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let (x, y) = noisy_fixture(5);
        let fit = fit_ols(&x, &y).unwrap();
        let yhat = fit.predict(&x);
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..x.ncols() {
            let s: f64 = (0..x.nrows())
                .map(|i| x.get(i, j) * (y[i] - yhat[i]))
                .sum();
            assert!(s.abs() < 1e-8 * y_norm);
        }
    }

    #[test]
    fn collinear_features_are_rank_deficient() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let v = i as f64;
                vec![v, 2.0 * v]
            })
            .collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(
            fit_ols(&x, &y).unwrap_err(),
            ModelError::RankDeficient { .. }
        ));
        // Ridge handles the same design.
        let fit = fit_ridge(&x, &y, 0.1).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn ridge_alpha_zero_reduces_to_ols() {
        let (x, y) = noisy_fixture(7);
        let ols = fit_ols(&x, &y).unwrap();
        let ridge = fit_ridge(&x, &y, 0.0).unwrap();
        assert!((ols.intercept - ridge.intercept).abs() < 1e-8);
        for j in 0..2 {
            assert!((ols.coefficients[j] - ridge.coefficients[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn ridge_shrinkage_limit() {
        let (x, y) = noisy_fixture(9);
        let fit = fit_ridge(&x, &y, 1e9).unwrap();
        let norm: f64 = fit.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(norm < 1e-3);
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((fit.intercept - y_mean).abs() < 1e-3);
    }

    #[test]
    fn duplicated_columns_share_weight_under_ridge() {
        // Closed-form symmetry: with identical columns the penalized
        // objective is symmetric in (w1, w2), so the minimizer has w1 = w2.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                let v: f64 = rng.gen_range(-1.0..1.0);
                vec![v, v]
            })
            .collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] + 0.5).collect();
        let fit = fit_ridge(&x, &y, 0.1).unwrap();
        assert!((fit.coefficients[0] - fit.coefficients[1]).abs() < 1e-8);
    }

    #[test]
    fn ridge_shrinkage_is_monotone_in_alpha() {
        let (x, y) = noisy_fixture(13);
        let mut prev = f64::INFINITY;
        for alpha in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let fit = fit_ridge(&x, &y, alpha).unwrap();
            let norm: f64 = fit.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!(norm <= prev + 1e-12);
            prev = norm;
        }
    }

    #[test]
    fn feature_scaling_covariance() {
        let (x, y) = noisy_fixture(17);
        let fit = fit_ols(&x, &y).unwrap();
        let c = 4.0;
        let mut scaled = x.clone();
        for i in 0..x.nrows() {
            scaled.set(i, 0, x.get(i, 0) * c);
        }
        let fit_scaled = fit_ols(&scaled, &y).unwrap();
        assert!((fit_scaled.coefficients[0] - fit.coefficients[0] / c).abs() < 1e-8);
        let p1 = fit.predict(&x);
        let p2 = fit_scaled.predict(&scaled);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn probe_rows_decode_the_model() {
        let (x, y) = noisy_fixture(19);
        let fit = fit_ols(&x, &y).unwrap();
        let probes = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = fit.predict(&probes);
        assert!((p[0] - fit.intercept).abs() < 1e-12);
        assert!((p[1] - fit.intercept - fit.coefficients[0]).abs() < 1e-12);
        assert!((p[2] - fit.intercept - fit.coefficients[1]).abs() < 1e-12);
    }
}
