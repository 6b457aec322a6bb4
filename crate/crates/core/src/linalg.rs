//! Minimal dense linear algebra: a row-major matrix and a Householder QR
//! least-squares solver. This is all the numerics the regressors and the
//! surrogate fitter need; no external BLAS/LAPACK.

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a flat row-major buffer. Panics if the length is not `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Matrix { rows, cols, data }
    }

    /// Build from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// New matrix holding the given rows (indices may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, z)| {
            let d = x - z;
            d * d
        })
        .sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, z)| x * z).sum()
}

/// Signals that column `column` of the design matrix is (numerically) a
/// linear combination of the preceding ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficiency {
    pub column: usize,
}

/// Solve `min ||A w - b||_2` with Householder QR (no pivoting).
///
/// Requires `A.nrows() >= A.ncols()`. Returns `RankDeficiency` when an R
/// diagonal collapses below `1e-12` relative to the largest column norm,
/// which is how exactly collinear features surface.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, RankDeficiency> {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(b.len(), m, "rhs length mismatch");
    assert!(m >= n, "underdetermined system");

    let mut r = a.clone();
    let mut qtb = b.to_vec();

    let scale = (0..n)
        .map(|j| (0..m).map(|i| r.get(i, j).powi(2)).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    let tol = 1e-12 * scale.max(1e-300);

    for k in 0..n {
        // Householder vector for column k, rows k..m.
        let norm = (k..m).map(|i| r.get(i, k).powi(2)).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(RankDeficiency { column: k });
        }
        let alpha = if r.get(k, k) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - k];
        for i in k..m {
            v[i - k] = r.get(i, k);
        }
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            // Apply H = I - 2 v v^T / (v^T v) to the trailing columns and to b.
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
                let f = 2.0 * s / vtv;
                for i in k..m {
                    let val = r.get(i, j) - f * v[i - k];
                    r.set(i, j, val);
                }
            }
            let s: f64 = (k..m).map(|i| v[i - k] * qtb[i]).sum();
            let f = 2.0 * s / vtv;
            for i in k..m {
                qtb[i] -= f * v[i - k];
            }
        }
        r.set(k, k, alpha);
        if r.get(k, k).abs() <= tol {
            return Err(RankDeficiency { column: k });
        }
    }

    // Back substitution on the upper-triangular n x n block.
    let mut w = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = qtb[k];
        for j in k + 1..n {
            s -= r.get(k, j) * w[j];
        }
        w[k] = s / r.get(k, k);
    }
    Ok(w)
}
