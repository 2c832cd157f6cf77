//! Affine constraint assembly over real coordinates.
//!
//! A Hermitian n×n variable occupies n² real coordinates: the n diagonal
//! entries followed by a `(re, im)` pair for every `i < j`, so that
//! `X[i][j] = re + i·im`. Scalar variables occupy one coordinate.

use num_complex::Complex64;

use crate::linalg::{CMatrix, HermitianMatrix};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermVar {
    id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarVar {
    id: usize,
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    /// `Some(n)` for an n×n Hermitian variable, `None` for a scalar.
    pub dim: Option<usize>,
    pub offset: usize,
}

impl VarInfo {
    pub fn len(&self) -> usize {
        self.dim.map_or(1, |n| n * n)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Basis matrix for coordinate `k` of an n×n Hermitian variable, as
/// `(i, j, value)` entries.
fn basis_entries(n: usize, k: usize) -> Vec<(usize, usize, Complex64)> {
    if k < n {
        return vec![(k, k, Complex64::new(1.0, 0.0))];
    }
    let mut idx = n;
    for i in 0..n {
        for j in (i + 1)..n {
            if k == idx {
                return vec![(i, j, Complex64::new(1.0, 0.0)), (j, i, Complex64::new(1.0, 0.0))];
            }
            if k == idx + 1 {
                return vec![(i, j, Complex64::new(0.0, 1.0)), (j, i, Complex64::new(0.0, -1.0))];
            }
            idx += 2;
        }
    }
    panic!("coordinate {k} out of range for dimension {n}");
}

/// Real coordinates of a Hermitian matrix, inverse of [`hermitian_from_coords`].
pub fn coords_from_hermitian(h: &HermitianMatrix) -> Vec<f64> {
    let n = h.dim();
    let mut out: Vec<f64> = (0..n).map(|i| h.get(i, i).re).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let z = h.get(i, j);
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

pub fn hermitian_from_coords(n: usize, x: &[f64]) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(x[i], 0.0);
    }
    let mut idx = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = Complex64::new(x[idx], x[idx + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    HermitianMatrix::from_matrix_unchecked(&m)
}

/// `F(x) = C + Σ_k x_k F_k`, required to be positive semidefinite.
#[derive(Debug, Clone)]
pub struct AffineHerm {
    pub label: String,
    pub dim: usize,
    /// Row-major constant term.
    pub constant: Vec<Complex64>,
    /// `(coordinate, row-major coefficient)`; coordinates are unique.
    pub terms: Vec<(usize, Vec<Complex64>)>,
}

impl AffineHerm {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
            constant: vec![ZERO; dim * dim],
            terms: Vec::new(),
        }
    }

    fn term_mut(&mut self, coord: usize) -> &mut Vec<Complex64> {
        let pos = match self.terms.iter().position(|(k, _)| *k == coord) {
            Some(p) => p,
            None => {
                self.terms.push((coord, vec![ZERO; self.dim * self.dim]));
                self.terms.len() - 1
            }
        };
        &mut self.terms[pos].1
    }

    /// Adds `m` to the constant term.
    pub fn add_constant(&mut self, m: &CMatrix) -> &mut Self {
        assert_eq!((m.nrows(), m.ncols()), (self.dim, self.dim));
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.constant[i * self.dim + j] += m[(i, j)];
            }
        }
        self
    }

    /// Adds `value` at entry `(i, i)` of the constant term.
    pub fn add_constant_diag(&mut self, i: usize, value: f64) -> &mut Self {
        self.constant[i * self.dim + i] += value;
        self
    }

    /// Adds `coef · L X L*` where `L` is `dim × n` and `X` is the n×n variable.
    pub fn add_congruence(
        &mut self,
        p: &LmiProblem,
        var: HermVar,
        coef: f64,
        l: &CMatrix,
    ) -> &mut Self {
        let info = &p.vars[var.id];
        let n = info.dim.expect("Hermitian variable");
        assert_eq!((l.nrows(), l.ncols()), (self.dim, n));
        let d = self.dim;
        for k in 0..n * n {
            let basis = basis_entries(n, k);
            let coord = info.offset + k;
            let term = self.term_mut(coord);
            for r in 0..d {
                for c in 0..d {
                    let mut acc = ZERO;
                    for &(i, j, v) in &basis {
                        acc += l[(r, i)] * v * l[(c, j)].conj();
                    }
                    term[r * d + c] += acc * coef;
                }
            }
        }
        self
    }

    /// Adds `x · m` for a scalar variable `x`.
    pub fn add_scalar(&mut self, p: &LmiProblem, var: ScalarVar, m: &CMatrix) -> &mut Self {
        assert_eq!((m.nrows(), m.ncols()), (self.dim, self.dim));
        let coord = p.vars[var.id].offset;
        let d = self.dim;
        let term = self.term_mut(coord);
        for r in 0..d {
            for c in 0..d {
                term[r * d + c] += m[(r, c)];
            }
        }
        self
    }

    /// Adds `coef · x` at diagonal entry `(i, i)`.
    pub fn add_scalar_diag(&mut self, p: &LmiProblem, var: ScalarVar, i: usize, coef: f64) -> &mut Self {
        let coord = p.vars[var.id].offset;
        let d = self.dim;
        self.term_mut(coord)[i * d + i] += Complex64::new(coef, 0.0);
        self
    }

    /// Value at the full coordinate vector `x`, symmetrized.
    pub fn evaluate(&self, x: &[f64]) -> HermitianMatrix {
        let d = self.dim;
        let mut m = CMatrix::from_row_slice(d, d, &self.constant);
        for (k, t) in &self.terms {
            for r in 0..d {
                for c in 0..d {
                    m[(r, c)] += t[r * d + c] * x[*k];
                }
            }
        }
        HermitianMatrix::from_matrix_unchecked(&m)
    }
}

/// `f(x) = c + Σ_k a_k x_k`, used as `f(x) ≥ 0` or `f(x) = 0`.
#[derive(Debug, Clone)]
pub struct AffineScalar {
    pub label: String,
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineScalar {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            constant: 0.0,
            terms: Vec::new(),
        }
    }

    fn add_term(&mut self, coord: usize, a: f64) {
        if a == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|(k, _)| *k == coord) {
            Some((_, v)) => *v += a,
            None => self.terms.push((coord, a)),
        }
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_scalar(&mut self, p: &LmiProblem, var: ScalarVar, coef: f64) -> &mut Self {
        self.add_term(p.vars[var.id].offset, coef);
        self
    }

    /// Adds `coef · Re(v X v*)` for a row vector `v`.
    pub fn add_quad(&mut self, p: &LmiProblem, var: HermVar, coef: f64, v: &[Complex64]) -> &mut Self {
        let info = &p.vars[var.id];
        let n = info.dim.expect("Hermitian variable");
        assert_eq!(v.len(), n);
        for k in 0..n * n {
            let mut acc = ZERO;
            for (i, j, b) in basis_entries(n, k) {
                acc += v[i] * b * v[j].conj();
            }
            self.add_term(info.offset + k, coef * acc.re);
        }
        self
    }

    pub fn add_trace(&mut self, p: &LmiProblem, var: HermVar, coef: f64) -> &mut Self {
        let info = &p.vars[var.id];
        let n = info.dim.expect("Hermitian variable");
        for i in 0..n {
            self.add_term(info.offset + i, coef);
        }
        self
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(k, a)| a * x[*k]).sum::<f64>()
    }
}

/// A feasibility problem: find `x` with every LMI ⪰ 0, every scalar
/// inequality ≥ 0 and every equality = 0. Variables declared PSD or
/// nonnegative carry their own constraint.
#[derive(Debug, Clone, Default)]
pub struct LmiProblem {
    pub vars: Vec<VarInfo>,
    pub lmis: Vec<AffineHerm>,
    pub inequalities: Vec<AffineScalar>,
    pub equalities: Vec<AffineScalar>,
    n_coords: usize,
}

impl LmiProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    /// An n×n Hermitian variable constrained to be PSD.
    pub fn psd_var(&mut self, name: impl Into<String>, n: usize) -> HermVar {
        let name = name.into();
        let var = self.push_var(name.clone(), Some(n));
        let mut c = AffineHerm::new(format!("{name} ⪰ 0"), n);
        c.add_congruence(self, var, 1.0, &CMatrix::identity(n, n));
        self.lmis.push(c);
        var
    }

    pub fn scalar_var(&mut self, name: impl Into<String>, nonneg: bool) -> ScalarVar {
        let name = name.into();
        let id = self.vars.len();
        self.push_var(name.clone(), None);
        let var = ScalarVar { id };
        if nonneg {
            let mut c = AffineScalar::new(format!("{name} ≥ 0"));
            c.add_scalar(self, var, 1.0);
            self.inequalities.push(c);
        }
        var
    }

    fn push_var(&mut self, name: String, dim: Option<usize>) -> HermVar {
        let id = self.vars.len();
        let info = VarInfo {
            name,
            dim,
            offset: self.n_coords,
        };
        self.n_coords += info.len();
        self.vars.push(info);
        HermVar { id }
    }

    pub fn add_lmi(&mut self, c: AffineHerm) {
        self.lmis.push(c);
    }

    pub fn add_inequality(&mut self, c: AffineScalar) {
        self.inequalities.push(c);
    }

    pub fn add_equality(&mut self, c: AffineScalar) {
        self.equalities.push(c);
    }

    pub fn var_info(&self, name: &str) -> Option<&VarInfo> {
        self.vars.iter().find(|v| v.name == name)
    }

    /// Direct evaluation of every constraint at `x`, independent of the
    /// barrier machinery: LMIs through a Jacobi eigensolve.
    pub fn replay(&self, x: &[f64]) -> Replay {
        assert_eq!(x.len(), self.n_coords);
        let mut entries = Vec::new();
        for c in &self.lmis {
            entries.push((c.label.clone(), c.evaluate(x).min_eigenvalue()));
        }
        for c in &self.inequalities {
            entries.push((c.label.clone(), c.evaluate(x)));
        }
        let mut max_violation = entries.iter().map(|(_, v)| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.equalities {
            let r = c.evaluate(x);
            max_violation = max_violation.max(r.abs());
            entries.push((c.label.clone(), -r.abs()));
        }
        Replay {
            margins: entries,
            max_violation,
        }
    }
}

/// Per-constraint margins (min eigenvalue, scalar value, or −|residual| for
/// equalities) and the largest violation.
#[derive(Debug, Clone)]
pub struct Replay {
    pub margins: Vec<(String, f64)>,
    pub max_violation: f64,
}

/// Variable values in problem coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: Vec<f64>,
}

impl Witness {
    pub fn hermitian(&self, p: &LmiProblem, var: HermVar) -> HermitianMatrix {
        let info = &p.vars[var.id];
        let n = info.dim.expect("Hermitian variable");
        hermitian_from_coords(n, &self.x[info.offset..info.offset + n * n])
    }

    pub fn scalar(&self, p: &LmiProblem, var: ScalarVar) -> f64 {
        self.x[p.vars[var.id].offset]
    }
}
