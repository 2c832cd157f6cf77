//! Log-det barrier interior-point method for small dense LMI problems.
//!
//! Phase I maximizes a common slack `s` with every constraint shifted by
//! `-s·I`; the problem is strictly feasible iff the optimal slack is
//! positive. Phase II minimizes a linear objective from a strictly feasible
//! start. Equalities are eliminated up front through a null-space basis.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::problem::{AffineScalar, LmiProblem, Witness};
use crate::error::{Error, Result};

type C64 = Complex64;

const CENTER_TOL: f64 = 1e-10;
const ALPHA: f64 = 0.01;
const BETA: f64 = 0.5;
const TAU_GROWTH: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    /// Cap on Newton iterations across all barrier stages.
    pub max_iter: usize,
    /// Every reduced coordinate is kept inside `(-box_bound, box_bound)`.
    pub box_bound: f64,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            max_iter: 200,
            box_bound: 1e4,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    StrictlyFeasible,
    Infeasible,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierIterate {
    pub iter: usize,
    pub tau: f64,
    pub slack: f64,
    /// Upper bound on the optimal slack, `slack + ν/τ` at a centered point.
    pub slack_upper: f64,
    pub decrement: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    pub witness: Option<Witness>,
    pub slack: f64,
    /// Largest violation of the unshifted constraints at the witness, by
    /// direct replay (`f64::INFINITY` without a witness).
    pub max_violation: f64,
    pub iterations: usize,
    pub diagnostic: Option<String>,
    pub trace: Vec<BarrierIterate>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::StrictlyFeasible
    }
}

/// Writes barrier iterates as CSV.
pub fn write_trace_csv(trace: &[BarrierIterate], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "iter,tau,slack,slack_upper,decrement,step")?;
    for it in trace {
        writeln!(
            w,
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            it.iter, it.tau, it.slack, it.slack_upper, it.decrement, it.step
        )?;
    }
    Ok(())
}

// ---- compiled barrier ------------------------------------------------------

struct Block {
    n: usize,
    c: Vec<C64>,
    terms: Vec<(usize, Vec<C64>)>,
}

struct Lin {
    c: f64,
    terms: Vec<(usize, f64)>,
}

/// Affine reparametrization `x = x0 + Z y` satisfying all equalities.
struct Reduction {
    x0: Vec<f64>,
    /// `None` means `Z = I`.
    z: Option<DMatrix<f64>>,
}

impl Reduction {
    fn dim(&self, n: usize) -> usize {
        self.z.as_ref().map_or(n, |z| z.ncols())
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        match &self.z {
            None => y.to_vec(),
            Some(z) => {
                let mut x = self.x0.clone();
                for (k, xk) in x.iter_mut().enumerate() {
                    for (j, yj) in y.iter().enumerate() {
                        *xk += z[(k, j)] * yj;
                    }
                }
                x
            }
        }
    }

    fn block(&self, c: &[C64], terms: &[(usize, Vec<C64>)], n: usize) -> Block {
        match &self.z {
            None => Block {
                n,
                c: c.to_vec(),
                terms: terms.to_vec(),
            },
            Some(z) => {
                let mut c = c.to_vec();
                for (k, f) in terms {
                    for (a, b) in c.iter_mut().zip(f) {
                        *a += b * self.x0[*k];
                    }
                }
                let mut out = Vec::new();
                for j in 0..z.ncols() {
                    let mut d = vec![C64::new(0.0, 0.0); n * n];
                    let mut any = false;
                    for (k, f) in terms {
                        let w = z[(*k, j)];
                        if w.abs() > 1e-15 {
                            any = true;
                            for (a, b) in d.iter_mut().zip(f) {
                                *a += b * w;
                            }
                        }
                    }
                    if any {
                        out.push((j, d));
                    }
                }
                Block { n, c, terms: out }
            }
        }
    }

    fn lin(&self, f: &AffineScalar) -> Lin {
        match &self.z {
            None => Lin {
                c: f.constant,
                terms: f.terms.clone(),
            },
            Some(z) => {
                let c = f.evaluate(&self.x0);
                let terms = (0..z.ncols())
                    .filter_map(|j| {
                        let a: f64 = f.terms.iter().map(|(k, a)| a * z[(*k, j)]).sum();
                        (a.abs() > 1e-15).then_some((j, a))
                    })
                    .collect();
                Lin { c, terms }
            }
        }
    }
}

fn reduce(p: &LmiProblem) -> std::result::Result<Reduction, String> {
    let n = p.n_coords();
    if p.equalities.is_empty() {
        return Ok(Reduction {
            x0: vec![0.0; n],
            z: None,
        });
    }
    let e = p.equalities.len();
    let mut a = DMatrix::<f64>::zeros(e, n);
    let mut b = DVector::<f64>::zeros(e);
    for (r, f) in p.equalities.iter().enumerate() {
        for (k, v) in &f.terms {
            a[(r, *k)] += v;
        }
        b[r] = -f.constant;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x0 = svd
        .solve(&b, 1e-12 * smax.max(1.0))
        .map_err(|e| format!("equality solve failed: {e}"))?;
    let resid = (&a * &x0 - &b).amax();
    if resid > 1e-9 * (1.0 + b.amax()) {
        return Err(format!("inconsistent equalities (residual {resid:.3e})"));
    }
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let cut = 1e-12 * smax.max(1.0).powi(2);
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= cut).collect();
    let mut z = DMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        z.set_column(j, &eig.eigenvectors.column(i));
    }
    Ok(Reduction {
        x0: x0.iter().copied().collect(),
        z: Some(z),
    })
}

/// In-place Cholesky of a Hermitian matrix (row-major); returns the lower
/// factor or `None` if not positive definite.
fn cholesky(n: usize, a: &[C64]) -> Option<Vec<C64>> {
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

fn inverse_from_cholesky(n: usize, l: &[C64]) -> Vec<C64> {
    // L^{-1} by forward substitution, then (L^{-1})* L^{-1}.
    let mut li = vec![C64::new(0.0, 0.0); n * n];
    for c in 0..n {
        for r in c..n {
            let mut s = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for k in c..r {
                s -= l[r * n + k] * li[k * n + c];
            }
            li[r * n + c] = s / l[r * n + r];
        }
    }
    let mut w = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for k in i.max(j)..n {
                s += li[k * n + i].conj() * li[k * n + j];
            }
            w[i * n + j] = s;
        }
    }
    w
}

struct Barrier {
    dim: usize,
    blocks: Vec<Block>,
    lins: Vec<Lin>,
    bound: f64,
    /// Linear objective (minimized), scaled by τ.
    w: Vec<f64>,
}

impl Barrier {
    fn nu(&self) -> f64 {
        (self.blocks.iter().map(|b| b.n).sum::<usize>() + self.lins.len() + 2 * self.dim) as f64
    }

    fn block_value(b: &Block, v: &[f64]) -> Vec<C64> {
        let mut g = b.c.clone();
        for (j, d) in &b.terms {
            let vj = v[*j];
            if vj != 0.0 {
                for (a, x) in g.iter_mut().zip(d) {
                    *a += x * vj;
                }
            }
        }
        g
    }

    fn lin_value(l: &Lin, v: &[f64]) -> f64 {
        l.c + l.terms.iter().map(|(j, a)| a * v[*j]).sum::<f64>()
    }

    /// Barrier value `τ wᵀv − Σ log det − Σ log`, or `None` outside the domain.
    fn value(&self, tau: f64, v: &[f64]) -> Option<f64> {
        let mut f = tau * self.w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        for b in &self.blocks {
            let l = cholesky(b.n, &Self::block_value(b, v))?;
            f -= 2.0 * (0..b.n).map(|i| l[i * b.n + i].re.ln()).sum::<f64>();
        }
        for l in &self.lins {
            let g = Self::lin_value(l, v);
            if !(g > 0.0) {
                return None;
            }
            f -= g.ln();
        }
        for &x in v {
            let (a, b) = (self.bound - x, self.bound + x);
            if !(a > 0.0 && b > 0.0) {
                return None;
            }
            f -= a.ln() + b.ln();
        }
        Some(f)
    }

    fn grad_hess(&self, tau: f64, v: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let m = self.dim;
        let mut g = DVector::from_iterator(m, self.w.iter().map(|a| tau * a));
        let mut h = DMatrix::<f64>::zeros(m, m);
        let mut ms: Vec<Vec<C64>> = Vec::new();
        for b in &self.blocks {
            let n = b.n;
            let l = cholesky(n, &Self::block_value(b, v))?;
            let winv = inverse_from_cholesky(n, &l);
            ms.clear();
            for (_, d) in &b.terms {
                let mut mj = vec![C64::new(0.0, 0.0); n * n];
                for r in 0..n {
                    for c in 0..n {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..n {
                            s += winv[r * n + k] * d[k * n + c];
                        }
                        mj[r * n + c] = s;
                    }
                }
                ms.push(mj);
            }
            for (a, (ja, _)) in b.terms.iter().enumerate() {
                let ma = &ms[a];
                g[*ja] -= (0..n).map(|i| ma[i * n + i].re).sum::<f64>();
                for (bb, (jb, _)) in b.terms.iter().enumerate().skip(a) {
                    let mb = &ms[bb];
                    let mut s = 0.0;
                    for r in 0..n {
                        for c in 0..n {
                            s += (ma[r * n + c] * mb[c * n + r]).re;
                        }
                    }
                    h[(*ja, *jb)] += s;
                    if ja != jb {
                        h[(*jb, *ja)] += s;
                    }
                }
            }
        }
        for l in &self.lins {
            let val = Self::lin_value(l, v);
            if !(val > 0.0) {
                return None;
            }
            for &(ja, a) in &l.terms {
                g[ja] -= a / val;
                for &(jb, b) in &l.terms {
                    h[(ja, jb)] += a * b / (val * val);
                }
            }
        }
        for (j, &x) in v.iter().enumerate() {
            let (a, b) = (self.bound - x, self.bound + x);
            g[j] += 1.0 / a - 1.0 / b;
            h[(j, j)] += 1.0 / (a * a) + 1.0 / (b * b);
        }
        Some((g, h))
    }

    fn newton_direction(g: &DVector<f64>, h: DMatrix<f64>) -> Option<DVector<f64>> {
        let scale = h.diagonal().amax().max(1e-300);
        let mut reg = 0.0;
        for _ in 0..6 {
            let mut hr = h.clone();
            for i in 0..hr.nrows() {
                hr[(i, i)] += reg;
            }
            if let Some(ch) = hr.cholesky() {
                let d = ch.solve(&(-g));
                if d.iter().all(|x| x.is_finite()) {
                    return Some(d);
                }
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        }
        None
    }
}

enum Step {
    Centered,
    Stop,
}

/// One damped Newton step. Returns the decrement and step length.
fn newton_step(bar: &Barrier, tau: f64, v: &mut [f64]) -> std::result::Result<(f64, f64), String> {
    let (g, h) = bar
        .grad_hess(tau, v)
        .ok_or_else(|| "iterate left the barrier domain".to_string())?;
    let d = Barrier::newton_direction(&g, h).ok_or_else(|| "singular Newton system".to_string())?;
    let slope = g.dot(&d);
    let lambda2 = -slope;
    if lambda2 / 2.0 <= CENTER_TOL {
        return Ok((lambda2, 0.0));
    }
    let f0 = bar.value(tau, v).ok_or_else(|| "iterate left the barrier domain".to_string())?;
    let mut t = 1.0;
    let mut trial = v.to_vec();
    loop {
        for (i, x) in trial.iter_mut().enumerate() {
            *x = v[i] + t * d[i];
        }
        if let Some(f) = bar.value(tau, &trial) {
            if f <= f0 + ALPHA * t * slope {
                break;
            }
        }
        t *= BETA;
        if t < 1e-14 {
            return Err(format!("line search stalled (decrement {lambda2:.3e})"));
        }
    }
    v.copy_from_slice(&trial);
    Ok((lambda2, t))
}

fn gershgorin_lower(n: usize, a: &[C64]) -> f64 {
    (0..n)
        .map(|i| a[i * n + i].re - (0..n).filter(|&j| j != i).map(|j| a[i * n + j].norm()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Phase I: decides strict feasibility of `p`.
pub fn solve_feasibility(p: &LmiProblem, opts: &SolverOptions) -> FeasibilityReport {
    let mut report = FeasibilityReport {
        status: FeasibilityStatus::Marginal,
        witness: None,
        slack: f64::NEG_INFINITY,
        max_violation: f64::INFINITY,
        iterations: 0,
        diagnostic: None,
        trace: Vec::new(),
    };
    let red = match reduce(p) {
        Ok(r) => r,
        Err(msg) => {
            report.status = FeasibilityStatus::Infeasible;
            report.diagnostic = Some(msg);
            return report;
        }
    };
    let m = red.dim(p.n_coords());
    let si = m; // slack coordinate
    let mut blocks = Vec::new();
    for c in &p.lmis {
        let mut b = red.block(&c.constant, &c.terms, c.dim);
        let mut shift = vec![C64::new(0.0, 0.0); c.dim * c.dim];
        for i in 0..c.dim {
            shift[i * c.dim + i] = C64::new(-1.0, 0.0);
        }
        b.terms.push((si, shift));
        blocks.push(b);
    }
    let mut lins = Vec::new();
    for c in &p.inequalities {
        let mut l = red.lin(c);
        l.terms.push((si, -1.0));
        lins.push(l);
    }

    // Start at y = 0 with a slack safely below every constraint.
    let mut v = vec![0.0; m + 1];
    let mut s0 = f64::INFINITY;
    for b in &blocks {
        s0 = s0.min(gershgorin_lower(b.n, &Barrier::block_value(b, &v)));
    }
    for l in &lins {
        s0 = s0.min(Barrier::lin_value(l, &v));
    }
    if !s0.is_finite() {
        s0 = 0.0;
    }
    v[si] = s0 - 1.0;
    let mut w = vec![0.0; m + 1];
    w[si] = -1.0;
    let bound = opts.box_bound.max(10.0 * v[si].abs());
    let bar = Barrier {
        dim: m + 1,
        blocks,
        lins,
        bound,
        w,
    };
    let nu = bar.nu();

    let finish = |report: &mut FeasibilityReport, v: &[f64], status: FeasibilityStatus| {
        report.status = status;
        report.slack = v[si];
        if status != FeasibilityStatus::Infeasible {
            let x = red.lift(&v[..m]);
            report.max_violation = p.replay(&x).max_violation;
            report.witness = Some(Witness { x });
        }
    };

    let mut tau = 1.0 / (1.0 + v[si].abs());
    let mut iters = 0;
    loop {
        // centering
        let outcome = loop {
            if iters >= opts.max_iter {
                break Step::Stop;
            }
            match newton_step(&bar, tau, &mut v) {
                Ok((dec, step)) => {
                    if opts.record_trace {
                        report.trace.push(BarrierIterate {
                            iter: iters,
                            tau,
                            slack: v[si],
                            slack_upper: v[si] + nu / tau,
                            decrement: dec,
                            step,
                        });
                    }
                    if v[si] > opts.feas_tol {
                        report.iterations = iters;
                        finish(&mut report, &v, FeasibilityStatus::StrictlyFeasible);
                        return report;
                    }
                    if step == 0.0 {
                        break Step::Centered;
                    }
                    iters += 1;
                }
                Err(msg) => {
                    report.diagnostic = Some(msg);
                    break Step::Stop;
                }
            }
        };
        report.iterations = iters;
        match outcome {
            Step::Stop => {
                if report.diagnostic.is_none() {
                    report.diagnostic = Some(format!("iteration cap {} reached", opts.max_iter));
                }
                finish(&mut report, &v, FeasibilityStatus::Marginal);
                return report;
            }
            Step::Centered => {
                let upper = v[si] + nu / tau;
                if upper < -opts.feas_tol {
                    finish(&mut report, &v, FeasibilityStatus::Infeasible);
                    return report;
                }
                if nu / tau < 0.1 * opts.feas_tol {
                    report.diagnostic = Some(format!(
                        "optimal slack {:.3e} within the marginal band",
                        v[si]
                    ));
                    finish(&mut report, &v, FeasibilityStatus::Marginal);
                    return report;
                }
                tau *= TAU_GROWTH;
            }
        }
    }
}

/// Phase II: minimizes `objective` over the constraint set, starting from a
/// strictly feasible `start`, until the barrier gap `ν/τ` is below `gap_tol`.
pub fn minimize_linear(
    p: &LmiProblem,
    objective: &AffineScalar,
    start: &Witness,
    opts: &SolverOptions,
    gap_tol: f64,
) -> Result<Witness> {
    let red = reduce(p).map_err(Error::Solver)?;
    let m = red.dim(p.n_coords());
    // project the start onto y-coordinates
    let y: Vec<f64> = match &red.z {
        None => start.x.clone(),
        Some(z) => {
            let dx = DVector::from_iterator(start.x.len(), start.x.iter().zip(&red.x0).map(|(a, b)| a - b));
            (z.transpose() * dx).iter().copied().collect()
        }
    };
    let bar = Barrier {
        dim: m,
        blocks: p
            .lmis
            .iter()
            .map(|c| red.block(&c.constant, &c.terms, c.dim))
            .collect(),
        lins: p.inequalities.iter().map(|c| red.lin(c)).collect(),
        bound: opts.box_bound.max(10.0 * y.iter().fold(0.0_f64, |a, b| a.max(b.abs()))),
        w: red.lin(objective).terms.iter().fold(vec![0.0; m], |mut w, (j, a)| {
            w[*j] += a;
            w
        }),
    };
    let mut v = y;
    if bar.value(1.0, &v).is_none() {
        return Err(Error::Solver("phase II start is not strictly feasible".into()));
    }
    let nu = bar.nu();
    let mut tau = 1.0;
    let mut iters = 0;
    loop {
        loop {
            if iters >= opts.max_iter {
                return Ok(Witness { x: red.lift(&v) });
            }
            let (_, step) = newton_step(&bar, tau, &mut v).map_err(Error::Solver)?;
            if step == 0.0 {
                break;
            }
            iters += 1;
        }
        if nu / tau < gap_tol {
            return Ok(Witness { x: red.lift(&v) });
        }
        tau *= TAU_GROWTH;
    }
}
