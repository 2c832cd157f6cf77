//! Brute-force cross-checks: Monte-Carlo mutual information, direct
//! beamformer search, worst-case CSI-error search and constraint replay.
//!
//! Nothing here shares code with the quadrature or the SDP path beyond
//! the plain data types.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianMatrix};
use crate::perfect::PerfectInstance;
use crate::robust::{RobustInstance, RobustSolution};

type C64 = Complex64;

const BATCH: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    pub mc_samples: usize,
    pub search_samples: usize,
    pub error_samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mc_samples: 10_000_000,
            search_samples: 200_000,
            error_samples: 10_000,
            seed: 12345,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        for (name, n) in [
            ("mc_samples", self.mc_samples),
            ("search_samples", self.search_samples),
            ("error_samples", self.error_samples),
        ] {
            if n < 1000 {
                v.push(format!("{name}: must be >= 1000, got {n}"));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }
}

/// Independent stream for batch `k` of a run seeded with `seed`.
fn batch_rng(seed: u64, k: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Circularly-symmetric complex Gaussian with `E|n|² = var`.
fn cgauss(rng: &mut impl Rng, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Monte-Carlo estimate of the finite-alphabet mutual information and its
/// standard error: a uniformly drawn symbol, unit-variance complex noise.
pub fn mi_monte_carlo(alphabet: &Alphabet, rho: f64, cfg: &OracleConfig) -> Result<(f64, f64)> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("rho must be nonnegative, got {rho}")));
    }
    let pts = alphabet.symbols();
    let m = pts.len();
    let sr = rho.sqrt();
    let batches = cfg.mc_samples.div_ceil(BATCH);
    let sums: Vec<(f64, f64, usize)> = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = batch_rng(cfg.seed, k as u64);
            let count = BATCH.min(cfg.mc_samples - k * BATCH);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let l = rng.random_range(0..m);
                let n = cgauss(&mut rng, 1.0);
                let n2 = n.norm_sqr();
                let mut acc = 0.0;
                for am in pts {
                    acc += (n2 - (n + sr * (pts[l] - am)).norm_sqr()).exp();
                }
                let v = acc.log2();
                s += v;
                s2 += v * v;
            }
            (s, s2, count)
        })
        .collect();
    let (s, s2, n) = sums
        .iter()
        .fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(((m as f64).log2() - mean, (var / nf).sqrt()))
}

// ---- beamformer search ------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Destination SNR `a + |hφ|²/(N0 + hΨh*)`.
    pub t: f64,
    pub phi: Vec<C64>,
    pub psi: HermitianMatrix,
}

/// Rank-one candidate shape: beam direction, power split and a unit-trace
/// AN covariance. Total power is then set as large as the constraints allow.
struct Shape {
    u: Vec<C64>,
    alpha: f64,
    psi0: HermitianMatrix,
}

fn quad(x: &HermitianMatrix, v: &[C64]) -> f64 {
    x.quad_form(v)
}

fn abs2_dot(v: &[C64], u: &[C64]) -> f64 {
    v.iter().zip(u).map(|(a, b)| a * b).sum::<C64>().norm_sqr()
}

fn evaluate_shape(inst: &PerfectInstance, s: &Shape) -> Option<(f64, f64)> {
    let (a, c) = (inst.bounds.a, inst.bounds.c);
    let n0 = inst.n0;
    let alpha = if inst.use_an { s.alpha } else { 1.0 };
    let mut p_max = inst.pr_max;
    // each constraint: P·(α·sig − k(1−α)·jam) ≤ k·N0
    let mut cap = |sig: f64, jam: f64, k: f64| -> bool {
        if k < 0.0 {
            return false;
        }
        let coef = alpha * sig - k * (1.0 - alpha) * jam;
        if coef > 0.0 {
            p_max = p_max.min(k * n0 / coef);
        }
        true
    };
    if inst.rho_eav_cap.is_finite() {
        for (z, b) in inst.z.iter().zip(&inst.bounds.b) {
            if !cap(abs2_dot(z, &s.u), quad(&s.psi0, z), inst.rho_eav_cap - b) {
                return None;
            }
        }
    }
    let hs = abs2_dot(&inst.h, &s.u);
    let hj = quad(&s.psi0, &inst.h);
    if !cap(hs, hj, c - a) {
        return None;
    }
    let p = p_max.max(0.0);
    Some((a + alpha * p * hs / (n0 + (1.0 - alpha) * p * hj), p))
}

fn shape_from_params(n: usize, x: &[f64]) -> Shape {
    let mut u: Vec<C64> = (0..n).map(|i| C64::new(x[2 * i], x[2 * i + 1])).collect();
    let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    u.iter_mut().for_each(|z| *z /= nu);
    let alpha = 1.0 / (1.0 + (-x[2 * n]).exp());
    let off = 2 * n + 1;
    let b = CMatrix::from_fn(n, n, |i, j| C64::new(x[off + 2 * (i * n + j)], x[off + 2 * (i * n + j) + 1]));
    let bb = &b * b.adjoint();
    let tr: f64 = (0..n).map(|i| bb[(i, i)].re).sum::<f64>().max(1e-300);
    Shape {
        u,
        alpha,
        psi0: HermitianMatrix::from_matrix_unchecked(&(bb / C64::new(tr, 0.0))),
    }
}

fn n_params(n: usize) -> usize {
    2 * n + 1 + 2 * n * n
}

struct NegT<'a> {
    inst: &'a PerfectInstance,
}

impl CostFunction for NegT<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let s = shape_from_params(self.inst.antennas(), x);
        Ok(evaluate_shape(self.inst, &s).map_or(1e10, |(t, _)| -t))
    }
}

fn polish(inst: &PerfectInstance, x0: Vec<f64>, scale: f64) -> Vec<f64> {
    let mut simplex = vec![x0.clone()];
    for i in 0..x0.len() {
        let mut x = x0.clone();
        x[i] += scale;
        simplex.push(x);
    }
    let solver = match NelderMead::new(simplex).with_sd_tolerance(1e-8) {
        Ok(s) => s,
        Err(_) => return x0,
    };
    match Executor::new(NegT { inst }, solver)
        .configure(|st| st.max_iters(4000))
        .run()
    {
        Ok(res) => res.state().get_best_param().cloned().unwrap_or(x0),
        Err(_) => x0,
    }
}

/// Random search over rank-one beamformers and AN covariances followed by a
/// Nelder–Mead polish of the best candidates. `None` when no candidate
/// satisfies the eavesdropper constraints (e.g. `bⱼ ≥ cap`).
pub fn beamformer_search(inst: &PerfectInstance, cfg: &OracleConfig) -> Option<SearchResult> {
    let n = inst.antennas();
    let np = n_params(n);
    if inst.apriori_infeasible() || inst.bounds.c < inst.bounds.a {
        return None;
    }
    let batches = cfg.search_samples.div_ceil(BATCH);
    const KEEP: usize = 4;
    let mut best: Vec<(f64, Vec<f64>)> = (0..batches)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = batch_rng(cfg.seed ^ 0x5eed_0f_beef, k as u64);
            let count = BATCH.min(cfg.search_samples - k * BATCH);
            let mut local: Vec<(f64, Vec<f64>)> = Vec::new();
            for _ in 0..count {
                let mut x: Vec<f64> = (0..np).map(|_| rng.sample(StandardNormal)).collect();
                x[2 * n] *= 3.0;
                if let Some((t, _)) = evaluate_shape(inst, &shape_from_params(n, &x)) {
                    local.push((t, x));
                    if local.len() > 4 * KEEP {
                        local.sort_by(|a, b| b.0.total_cmp(&a.0));
                        local.truncate(KEEP);
                    }
                }
            }
            local.sort_by(|a, b| b.0.total_cmp(&a.0));
            local.truncate(KEEP);
            local
        })
        .collect();
    best.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)));
    best.truncate(KEEP);
    let mut top: Option<(f64, Vec<f64>)> = None;
    for (_, x) in best {
        let mut x = polish(inst, x, 0.2);
        x = polish(inst, x, 0.01);
        if let Some((t, _)) = evaluate_shape(inst, &shape_from_params(n, &x)) {
            if top.as_ref().is_none_or(|(bt, _)| t > *bt) {
                top = Some((t, x));
            }
        }
    }
    let (t, x) = top?;
    let s = shape_from_params(n, &x);
    let (_, p) = evaluate_shape(inst, &s)?;
    let alpha = if inst.use_an { s.alpha } else { 1.0 };
    let amp = (alpha * p).sqrt();
    Some(SearchResult {
        t,
        phi: s.u.iter().map(|z| z * amp).collect(),
        psi: s.psi0.scale((1.0 - alpha) * p),
    })
}

// ---- worst-case error search -------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Extremum {
    Min,
    Max,
}

/// `constant + (center + e) X (center + e)*` over row-vector errors `e`.
#[derive(Debug, Clone)]
pub struct QuadForm {
    pub x: HermitianMatrix,
    pub center: Vec<C64>,
    pub constant: f64,
}

impl QuadForm {
    pub fn eval(&self, e: &[C64]) -> f64 {
        let v: Vec<C64> = self.center.iter().zip(e).map(|(a, b)| a + b).collect();
        self.constant + self.x.quad_form(&v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstCase {
    pub value: f64,
    /// Best value found by sampling alone.
    pub sampled: f64,
    /// Trust-region extreme from the eigendecomposition.
    pub exact: f64,
    pub error: Vec<C64>,
}

/// Exact `min (v+e) X (v+e)*` over `‖e‖ ≤ ε` (trust-region subproblem in
/// `w = (v+e)*`, solved on the eigenbasis of `X`). Returns value and `e`.
fn trust_region_min(x: &HermitianMatrix, center: &[C64], eps: f64) -> (f64, Vec<C64>) {
    let n = x.dim();
    let eig = hermitian_eigen(x);
    // coordinates of c = v* in the eigenbasis
    let c: Vec<C64> = eig
        .vectors
        .iter()
        .map(|q| q.iter().zip(center).map(|(qi, vi)| qi.conj() * vi.conj()).sum())
        .collect();
    let lam = &eig.values;
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let dist2 = |mu: f64| -> f64 {
        lam.iter()
            .zip(&c)
            .map(|(l, ci)| {
                let d = l + mu;
                if d.abs() < 1e-300 {
                    if ci.norm() > 0.0 { f64::INFINITY } else { 0.0 }
                } else {
                    ci.norm_sqr() * (l / d).powi(2)
                }
            })
            .sum()
    };
    let mu_lo = (-lmin).max(0.0);
    let w_coords: Vec<C64> = if dist2(mu_lo) <= eps * eps {
        // interior or hard case: stationary at μ = μ_lo, then spend the
        // remaining radius along the bottom eigenvector
        let mut w: Vec<C64> = lam
            .iter()
            .zip(&c)
            .map(|(l, ci)| {
                let d = l + mu_lo;
                if d.abs() < 1e-12 * (1.0 + lmin.abs()) { *ci } else { ci * (mu_lo / d) }
            })
            .collect();
        if mu_lo > 0.0 {
            let used: f64 = w.iter().zip(&c).map(|(wi, ci)| (wi - ci).norm_sqr()).sum();
            let k = lam.iter().position(|&l| l == lmin).unwrap_or(n - 1);
            let extra = (eps * eps - used).max(0.0).sqrt();
            let dir = if w[k].norm() > 0.0 { w[k] / w[k].norm() } else { C64::new(1.0, 0.0) };
            w[k] += dir * extra;
        }
        w
    } else {
        let (mut lo, mut hi) = (mu_lo, mu_lo.max(1.0));
        while dist2(hi) > eps * eps {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dist2(mid) > eps * eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = hi;
        lam.iter().zip(&c).map(|(l, ci)| ci * (mu / (l + mu))).collect()
    };
    // back to the standard basis: w = Σ q_i w_i, e = w* − v
    let mut w = vec![C64::new(0.0, 0.0); n];
    for (q, wi) in eig.vectors.iter().zip(&w_coords) {
        for k in 0..n {
            w[k] += q[k] * wi;
        }
    }
    let mut e: Vec<C64> = w.iter().zip(center).map(|(wk, vk)| wk.conj() - vk).collect();
    let ne = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if ne > eps && ne > 0.0 {
        e.iter_mut().for_each(|z| *z *= eps / ne);
    }
    let v: Vec<C64> = center.iter().zip(&e).map(|(a, b)| a + b).collect();
    (x.quad_form(&v), e)
}

/// Uniform draw from the complex ball of radius `eps` in `C^n`; with
/// `boundary` the draw is on the sphere.
pub fn draw_error(rng: &mut impl Rng, n: usize, eps: f64, boundary: bool) -> Vec<C64> {
    let mut e: Vec<C64> = (0..n).map(|_| cgauss(rng, 1.0)).collect();
    let norm = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let r = if boundary {
        eps
    } else {
        eps * rng.random::<f64>().powf(1.0 / (2 * n) as f64)
    };
    e.iter_mut().for_each(|z| *z *= r / norm);
    e
}

/// Extreme value of `form` over the ε-ball: the better of `error_samples`
/// draws (half on the sphere) and the exact trust-region solution.
pub fn worst_case_error_search(form: &QuadForm, eps: f64, ext: Extremum, cfg: &OracleConfig) -> WorstCase {
    let n = form.center.len();
    let sign = match ext {
        Extremum::Min => 1.0,
        Extremum::Max => -1.0,
    };
    let better = |a: f64, b: f64| sign * a < sign * b;
    let mut rng = batch_rng(cfg.seed ^ 0x0e44_0b41, 0);
    let mut sampled = form.eval(&vec![C64::new(0.0, 0.0); n]);
    let mut arg = vec![C64::new(0.0, 0.0); n];
    if eps > 0.0 {
        for k in 0..cfg.error_samples {
            let e = draw_error(&mut rng, n, eps, k % 2 == 0);
            let v = form.eval(&e);
            if better(v, sampled) {
                sampled = v;
                arg = e;
            }
        }
    }
    let (q, e_exact) = trust_region_min(&form.x.scale(sign), &form.center, eps);
    let exact = form.constant + sign * q;
    let (value, error) = if better(exact, sampled) || exact == sampled {
        (exact, e_exact)
    } else {
        (sampled, arg)
    };
    WorstCase {
        value,
        sampled,
        exact,
        error,
    }
}

// ---- replay ------------------------------------------------------------------

/// Composite SNRs of a concrete beamformer/AN pair, evaluated from the raw
/// channel gains.
#[derive(Debug, Clone, Serialize)]
pub struct Replay {
    pub destination_snr: f64,
    pub eavesdropper_snr: Vec<f64>,
    pub relay_snr: f64,
    pub power: f64,
}

pub fn replay(ch: &ChannelSet, ps: f64, n0: f64, phi: &[C64], psi: &HermitianMatrix) -> Replay {
    let snr = |direct: C64, link: &[C64]| {
        ps * direct.norm_sqr() / n0 + abs2_dot(link, phi) / (n0 + psi.quad_form(link))
    };
    Replay {
        destination_snr: snr(ch.h0, &ch.h),
        eavesdropper_snr: ch.z0.iter().zip(&ch.z).map(|(z0, z)| snr(*z0, z)).collect(),
        relay_snr: ps * ch.g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n0,
        power: phi.iter().map(|z| z.norm_sqr()).sum::<f64>() + psi.trace(),
    }
}

/// Largest violation of the robust quadratic bounds over random errors.
#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    /// `(constraint label, worst violation over draws)`; ≤ 0 means sound.
    pub sampled: Vec<(String, f64)>,
    /// Same, at the exact trust-region extremes.
    pub exact: Vec<(String, f64)>,
    pub max_violation: f64,
}

/// Checks every per-error bound of a robust solution with
/// `cfg.error_samples` draws per ball plus the analytic extremes.
pub fn s_procedure_soundness(inst: &RobustInstance, sol: &RobustSolution, cfg: &OracleConfig) -> SoundnessReport {
    let n0 = inst.n0;
    let (a, h) = (inst.bounds.a, &inst.estimates.h);
    let eh = inst.radii.eps_h;
    let mut checks: Vec<(String, QuadForm, Extremum, f64, f64)> = Vec::new();
    // (label, form, which extreme matters, bound, sign) with violation = sign·(bound − value)
    let a_phi_psi = sol.psi.scale(a).add(&sol.phi);
    let form = |x: HermitianMatrix, v: &[C64], c: f64| QuadForm { x, center: v.to_vec(), constant: c };
    checks.push(("destination numerator ≥ r1".into(), form(a_phi_psi, h, a * n0), Extremum::Min, sol.r[0], 1.0));
    checks.push(("destination noise ≤ r2".into(), form(sol.psi.clone(), h, n0), Extremum::Max, sol.r[1], -1.0));
    checks.push(("relay-side signal ≤ r3".into(), form(sol.phi.clone(), h, 0.0), Extremum::Max, sol.r[2], -1.0));
    checks.push(("relay-side noise ≥ r4".into(), form(sol.psi.clone(), h, n0), Extremum::Min, sol.r[3], 1.0));
    for (j, (z, b)) in inst.estimates.z.iter().zip(&inst.bounds.b).enumerate() {
        if j >= sol.s1.len() {
            break;
        }
        let x = sol.psi.scale(*b).add(&sol.phi);
        checks.push((format!("eavesdropper {j} numerator ≤ s1"), form(x, z, b * n0), Extremum::Max, sol.s1[j], -1.0));
        checks.push((format!("eavesdropper {j} noise ≥ s2"), form(sol.psi.clone(), z, n0), Extremum::Min, sol.s2[j], 1.0));
    }
    let mut sampled = Vec::new();
    let mut exact = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for (label, f, ext, bound, sign) in checks {
        let eps = if label.starts_with("eavesdropper") {
            let j: usize = label.split_whitespace().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
            inst.radii.eps_z[j]
        } else {
            eh
        };
        let wc = worst_case_error_search(&f, eps, ext, cfg);
        let vs = sign * (bound - wc.sampled);
        let ve = sign * (bound - wc.exact);
        max_violation = max_violation.max(vs).max(ve);
        sampled.push((label.clone(), vs));
        exact.push((label, ve));
    }
    SoundnessReport {
        sampled,
        exact,
        max_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small() -> OracleConfig {
        OracleConfig {
            mc_samples: 200_000,
            search_samples: 20_000,
            error_samples: 2_000,
            seed: 7,
        }
    }

    #[test]
    fn mc_zero_snr() {
        let (v, se) = mi_monte_carlo(&Alphabet::bpsk(), 0.0, &small()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        assert!(se <= 1e-3);
    }

    #[test]
    fn mc_is_deterministic() {
        let a = mi_monte_carlo(&Alphabet::bpsk(), 1.0, &small()).unwrap();
        let b = mi_monte_carlo(&Alphabet::bpsk(), 1.0, &small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isotropic_max_is_analytic() {
        let h = vec![c(0.3, -0.4), c(0.1, 0.2)];
        let form = QuadForm {
            x: HermitianMatrix::identity(2),
            center: h.clone(),
            constant: 1.0,
        };
        let eps = 0.1;
        let nh = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let wc = worst_case_error_search(&form, eps, Extremum::Max, &small());
        assert_abs_diff_eq!(wc.exact, 1.0 + (nh + eps).powi(2), epsilon = 1e-10);
        assert!(wc.sampled <= wc.exact + 1e-12);
    }

    #[test]
    fn zero_radius_is_nominal() {
        let form = QuadForm {
            x: HermitianMatrix::outer(&[c(1.0, 0.5), c(-0.2, 0.3)]),
            center: vec![c(0.4, 0.0), c(0.0, 0.9)],
            constant: 0.5,
        };
        let nominal = form.eval(&[c(0.0, 0.0), c(0.0, 0.0)]);
        for ext in [Extremum::Min, Extremum::Max] {
            assert_abs_diff_eq!(worst_case_error_search(&form, 0.0, ext, &small()).value, nominal, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_min_beats_sampling_for_indefinite_form() {
        let x = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.3, 0.8), c(0.3, -0.8), c(-0.5, 0.0)],
        ))
        .unwrap();
        let form = QuadForm {
            x,
            center: vec![c(0.2, 0.1), c(-0.3, 0.05)],
            constant: 0.0,
        };
        let wc = worst_case_error_search(&form, 0.3, Extremum::Min, &small());
        assert!(wc.exact <= wc.sampled + 1e-9, "{wc:?}");
        let ne = wc.error.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(ne <= 0.3 + 1e-12);
        assert_abs_diff_eq!(form.eval(&wc.error), wc.value, epsilon = 1e-10);
    }

    #[test]
    fn config_counts_validated() {
        let cfg = OracleConfig { error_samples: 10, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(OracleConfig::default().validate().is_ok());
    }
}
