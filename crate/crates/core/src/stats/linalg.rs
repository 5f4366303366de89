//! Covariance matrices, Cholesky factorization and multivariate normal draws.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Pivots below `-PSD_TOLERANCE * max(1, |a_jj|)` mark a matrix as not PSD;
/// anything above is clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::shape(format!(
                    "covariance row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::shape(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                let scale = a.abs().max(b.abs()).max(1.0);
                if !a.is_finite() || (a - b).abs() > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::shape(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Adds `ridge` to every diagonal entry.
    pub fn with_ridge(&self, ridge: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.entries[i * self.dim + i] += ridge;
        }
        out
    }
}

/// Lower-triangular factor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    dim: usize,
    entries: Vec<f64>,
}

impl LowerTriangular {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Smallest diagonal entry, useful to detect (near) singular inputs.
    pub fn min_diagonal(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.get(i, i))
            .fold(f64::INFINITY, f64::min)
    }

    /// L·z
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let row = &self.entries[i * self.dim..i * self.dim + i + 1];
            out[i] = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }
}

/// Cholesky factorization L·Lᵀ = m for positive semi-definite `m`.
///
/// Small negative pivots are clamped to zero; a zero pivot zeroes the rest of
/// its column, which is exact for PSD input.
pub fn cholesky_factor(m: &CovarianceMatrix) -> Result<LowerTriangular> {
    let n = m.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        let scale = m.get(j, j).abs().max(1.0);
        if pivot < -PSD_TOLERANCE * scale || pivot.is_nan() {
            return Err(Error::NotPsd { index: j, pivot });
        }
        // Pivots at round-off level of the diagonal count as exact zeros.
        if pivot <= 1e-14 * scale {
            continue;
        }
        let d = pivot.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(LowerTriangular { dim: n, entries: l })
}

/// Draws `n` rows from N(mean, cov).
pub fn mvn_sample<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &CovarianceMatrix,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if mean.len() != cov.dim() {
        return Err(Error::shape(format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            cov.dim(),
            cov.dim()
        )));
    }
    let l = cholesky_factor(cov)?;
    Ok(mvn_sample_factored(mean, &l, n, rng))
}

/// As [`mvn_sample`] with a precomputed factor.
pub fn mvn_sample_factored<R: Rng + ?Sized>(
    mean: &[f64],
    l: &LowerTriangular,
    n: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let d = mean.len();
    let mut z = vec![0.0; d];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let mut row = vec![0.0; d];
        l.mul_vec(&z, &mut row);
        for (x, m) in row.iter_mut().zip(mean) {
            *x += m;
        }
        out.push(row);
    }
    out
}

/// Column means and unbiased (n − 1) sample covariance of row vectors.
pub fn sample_mean_cov(rows: &[Vec<f64>], dim: usize) -> (Vec<f64>, CovarianceMatrix) {
    let n = rows.len();
    let mut mean = vec![0.0; dim];
    if n == 0 {
        return (mean, CovarianceMatrix::zeros(dim));
    }
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut entries = vec![0.0; dim * dim];
    if n > 1 {
        for row in rows {
            for i in 0..dim {
                let di = row[i] - mean[i];
                for j in 0..=i {
                    entries[i * dim + j] += di * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..dim {
            for j in 0..=i {
                let v = entries[i * dim + j] / (n as f64 - 1.0);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
    }
    (mean, CovarianceMatrix { dim, entries })
}
