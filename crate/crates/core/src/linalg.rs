//! Small dense Hermitian linear algebra.
//!
//! Everything here is sized for relay problems with a handful of antennas:
//! matrices are at most a few tens of rows, so plain dense storage and a
//! cyclic Jacobi eigensolver are adequate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

/// A dense Hermitian matrix.
///
/// Construction validates conjugate symmetry and finiteness; the stored
/// matrix is then symmetrized exactly so downstream code can rely on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    dim: usize,
    // row-major, full storage
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::Domain(format!("non-finite entry at ({i},{j})")));
                }
                if (z - m[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::Domain(format!(
                        "matrix not Hermitian at ({i},{j}): {z} vs conj {}",
                        m[(j, i)].conj()
                    )));
                }
            }
        }
        Ok(Self::from_matrix_unchecked(&m))
    }

    /// Symmetrizes `m` as (m + m*)/2 without validation.
    pub fn from_matrix_unchecked(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            }
        }
        Self { dim: n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            dim: n,
            entries: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        h
    }

    /// `v v*` for a column vector `v`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut h = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                h.entries[i * n + j] = v[i] * v[j].conj();
            }
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    /// Real quadratic form `v X v*` for a row vector `v`.
    pub fn quad_form(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim, "quad_form dimension mismatch");
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i] * self.get(i, j) * v[j].conj();
            }
        }
        acc.re
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values.last().copied().unwrap_or(0.0)
    }
}

/// `[[Re H, -Im H], [Im H, Re H]]`, the real symmetric embedding of a
/// complex matrix. For Hermitian input the spectrum is the complex spectrum
/// with every eigenvalue repeated twice.
pub fn complex_to_real_embed(h: &HermitianMatrix) -> DMatrix<f64> {
    embed_matrix(&h.to_matrix())
}

pub fn embed_matrix(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
            out[(i + n, j + n)] = z.re;
        }
    }
    out
}

/// Validating front end for [`complex_to_real_embed`] on a raw matrix.
pub fn embed_hermitian(m: CMatrix) -> Result<DMatrix<f64>> {
    Ok(complex_to_real_embed(&HermitianMatrix::new(m)?))
}

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues sorted descending (stable in the original index) and
/// the matching eigenvectors as columns.
pub fn jacobi_eigen_symmetric(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().map(|x| x.abs()).fold(0.0_f64, f64::max);
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &v.column(i));
    }
    (values, vecs)
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors, one per value.
    pub vectors: Vec<CVector>,
}

/// Eigendecomposition of a Hermitian matrix through Jacobi on its real
/// embedding. Each embedded eigenvector `[x; y]` maps to `x + i y`; the
/// duplicate partner `[-y; x]` is removed by complex Gram-Schmidt.
pub fn hermitian_eigen(h: &HermitianMatrix) -> HermitianEigen {
    let n = h.dim();
    let (_, vecs) = jacobi_eigen_symmetric(&complex_to_real_embed(h));
    let hm = h.to_matrix();
    let mut vectors: Vec<CVector> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for col in 0..2 * n {
        if vectors.len() == n {
            break;
        }
        let mut u = CVector::from_fn(n, |i, _| {
            Complex64::new(vecs[(i, col)], vecs[(i + n, col)])
        });
        for w in &vectors {
            let proj = w.dotc(&u);
            u -= w * proj;
        }
        let norm = u.norm();
        if norm < 0.5 {
            continue;
        }
        u /= Complex64::new(norm, 0.0);
        values.push((u.adjoint() * &hm * &u)[(0, 0)].re);
        vectors.push(u);
    }
    HermitianEigen { values, vectors }
}
