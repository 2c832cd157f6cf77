//! Robust lower bound under norm-bounded CSI errors.
//!
//! Every quadratic form that carries an uncertain channel is bounded
//! separately by an auxiliary scalar, and each "for all errors in the
//! ball" condition becomes one (N+1)×(N+1) LMI with a nonnegative
//! multiplier. The bilinear `r·r₂` is fixed by bisecting on `r`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::MiEvaluator;
use crate::channel::{scalar_bounds_robust, ChannelSet, PowerConfig, ScalarBounds, UncertaintyRadii};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::outcome::{extract_beamvector, OutcomeStatus, SolveOutcome};
use crate::perfect::solver_options;
use crate::scenario::SolverSettings;
use crate::sdp::{
    bisect_max, minimize_linear, solve_feasibility, AffineHerm, AffineScalar, HermVar, LmiProblem,
    ScalarVar, Witness,
};

#[derive(Debug, Clone)]
pub struct RobustInstance {
    pub estimates: ChannelSet,
    pub radii: UncertaintyRadii,
    pub bounds: ScalarBounds,
    pub n0: f64,
    pub pr_max: f64,
    pub rho_eav_cap: f64,
    pub r0: f64,
    pub use_an: bool,
}

impl RobustInstance {
    pub fn new(
        estimates: &ChannelSet,
        radii: &UncertaintyRadii,
        pw: &PowerConfig,
        mi: &MiEvaluator,
        r0: f64,
        use_an: bool,
    ) -> Result<Self> {
        if !(r0 >= 0.0) {
            return Err(Error::Domain(format!("R0 must be nonnegative, got {r0}")));
        }
        let v = radii.violations(estimates.eavesdroppers());
        if !v.is_empty() {
            return Err(Error::InvalidScenario(v));
        }
        Ok(Self {
            estimates: estimates.clone(),
            radii: radii.clone(),
            bounds: scalar_bounds_robust(estimates, radii, pw),
            n0: pw.n0,
            pr_max: pw.pr_max,
            rho_eav_cap: mi.inverse_mi(2.0 * r0)?,
            r0,
            use_an,
        })
    }

    pub fn antennas(&self) -> usize {
        self.estimates.antennas()
    }

    /// `c ≤ a_max` forces `r₃ ≤ 0` and leaves no usable relay link.
    pub fn relay_link_unusable(&self) -> bool {
        self.bounds.c <= self.bounds.a_max
    }

    pub fn apriori_infeasible(&self) -> bool {
        self.rho_eav_cap.is_finite() && self.bounds.b.iter().any(|&b| b >= self.rho_eav_cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    A1,
    A2,
    A3,
    A4,
    B1(usize),
    B2(usize),
}

#[derive(Debug, Clone)]
pub struct SProcedureBlock {
    pub which: BlockKind,
    pub multiplier: ScalarVar,
    pub matrix: AffineHerm,
}

#[derive(Debug, Clone)]
pub struct RobustVars {
    pub phi: HermVar,
    pub psi: Option<HermVar>,
    pub r: [ScalarVar; 4],
    pub lambda: [ScalarVar; 4],
    /// Per eavesdropper; empty when the cap is vacuous.
    pub s1: Vec<ScalarVar>,
    pub s2: Vec<ScalarVar>,
    pub mu1: Vec<ScalarVar>,
    pub mu2: Vec<ScalarVar>,
    pub blocks: Vec<SProcedureBlock>,
}

/// Values of all robust-program variables at a witness.
#[derive(Debug, Clone, Serialize)]
pub struct RobustSolution {
    pub phi: HermitianMatrix,
    pub psi: HermitianMatrix,
    pub r: [f64; 4],
    pub lambda: [f64; 4],
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    /// Minimum eigenvalue of every S-procedure block.
    pub block_min_eig: Vec<(BlockKind, f64)>,
}

impl RobustSolution {
    fn from_witness(p: &LmiProblem, vars: &RobustVars, w: &Witness) -> Self {
        let n = p.vars[0].dim.unwrap_or(0);
        let get = |v: &[ScalarVar]| v.iter().map(|&s| w.scalar(p, s)).collect::<Vec<_>>();
        Self {
            phi: w.hermitian(p, vars.phi),
            psi: vars.psi.map_or_else(|| HermitianMatrix::zeros(n), |v| w.hermitian(p, v)),
            r: vars.r.map(|s| w.scalar(p, s)),
            lambda: vars.lambda.map(|s| w.scalar(p, s)),
            s1: get(&vars.s1),
            s2: get(&vars.s2),
            mu1: get(&vars.mu1),
            mu2: get(&vars.mu2),
            block_min_eig: vars
                .blocks
                .iter()
                .map(|b| (b.which, b.matrix.evaluate(&w.x).min_eigenvalue()))
                .collect(),
        }
    }
}

/// `[εI; v]`, so that `L X L* = [[ε²X, εX v*], [εv X, v X v*]]`.
fn stacked(v: &[Complex64], eps: f64) -> CMatrix {
    let n = v.len();
    let mut l = CMatrix::zeros(n + 1, n);
    for i in 0..n {
        l[(i, i)] = Complex64::new(eps, 0.0);
        l[(n, i)] = v[i];
    }
    l
}

/// One S-procedure block over the unit ball `e = εu`, `‖u‖ ≤ 1`:
/// `L (kφ Φ + kψ Ψ) L* + diag(m·I, constant − m + Σ scalars)` with
/// `L = [εI; v]`. At `ε = 0` this is the nominal constraint with a bounded
/// multiplier.
#[allow(clippy::too_many_arguments)]
fn s_block(
    p: &LmiProblem,
    label: &str,
    v: &[Complex64],
    phi: (HermVar, f64),
    psi: Option<(HermVar, f64)>,
    multiplier: ScalarVar,
    eps: f64,
    constant: f64,
    corner_scalars: &[(ScalarVar, f64)],
) -> AffineHerm {
    let n = v.len();
    let l = stacked(v, eps);
    let mut m = AffineHerm::new(label, n + 1);
    if phi.1 != 0.0 {
        m.add_congruence(p, phi.0, phi.1, &l);
    }
    if let Some((psi, k)) = psi {
        if k != 0.0 {
            m.add_congruence(p, psi, k, &l);
        }
    }
    for i in 0..n {
        m.add_scalar_diag(p, multiplier, i, 1.0);
    }
    m.add_scalar_diag(p, multiplier, n, -1.0);
    m.add_constant_diag(n, constant);
    for &(s, k) in corner_scalars {
        m.add_scalar_diag(p, s, n, k);
    }
    m
}

/// Feasibility problem at robust destination SNR `r`.
pub fn build_robust_feasibility(inst: &RobustInstance, r: f64) -> Result<(LmiProblem, RobustVars)> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("r must be nonnegative, got {r}")));
    }
    let n = inst.antennas();
    let ScalarBounds { a, c, a_max, ref b } = inst.bounds;
    let (h, n0) = (&inst.estimates.h, inst.n0);
    let eh = inst.radii.eps_h;
    let mut p = LmiProblem::new();
    let phi = p.psd_var("Phi", n);
    let psi = inst.use_an.then(|| p.psd_var("Psi", n));
    let r1 = p.scalar_var("r1", true);
    let r2 = p.scalar_var("r2", false);
    let r3 = p.scalar_var("r3", false);
    let r4 = p.scalar_var("r4", true);
    let lambda = [1, 2, 3, 4].map(|k| p.scalar_var(format!("lambda{k}"), true));

    let mut blocks = vec![
        SProcedureBlock {
            which: BlockKind::A1,
            multiplier: lambda[0],
            matrix: s_block(&p, "A1", h, (phi, 1.0), psi.map(|v| (v, a)), lambda[0], eh, a * n0, &[(r1, -1.0)]),
        },
        SProcedureBlock {
            which: BlockKind::A2,
            multiplier: lambda[1],
            matrix: s_block(&p, "A2", h, (phi, 0.0), psi.map(|v| (v, -1.0)), lambda[1], eh, -n0, &[(r2, 1.0)]),
        },
        SProcedureBlock {
            which: BlockKind::A3,
            multiplier: lambda[2],
            matrix: s_block(&p, "A3", h, (phi, -1.0), None, lambda[2], eh, 0.0, &[(r3, 1.0)]),
        },
        SProcedureBlock {
            which: BlockKind::A4,
            multiplier: lambda[3],
            matrix: s_block(&p, "A4", h, (phi, 0.0), psi.map(|v| (v, 1.0)), lambda[3], eh, n0, &[(r4, -1.0)]),
        },
    ];

    let (mut s1, mut s2, mut mu1, mut mu2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    if inst.rho_eav_cap.is_finite() {
        for (j, (z, bj)) in inst.estimates.z.iter().zip(b).enumerate() {
            let ez = inst.radii.eps_z[j];
            let s1j = p.scalar_var(format!("s1_{j}"), false);
            let s2j = p.scalar_var(format!("s2_{j}"), true);
            let mu1j = p.scalar_var(format!("mu1_{j}"), true);
            let mu2j = p.scalar_var(format!("mu2_{j}"), true);
            blocks.push(SProcedureBlock {
                which: BlockKind::B1(j),
                multiplier: mu1j,
                matrix: s_block(
                    &p,
                    &format!("B1_{j}"),
                    z,
                    (phi, -1.0),
                    psi.map(|v| (v, -bj)),
                    mu1j,
                    ez,
                    -bj * n0,
                    &[(s1j, 1.0)],
                ),
            });
            blocks.push(SProcedureBlock {
                which: BlockKind::B2(j),
                multiplier: mu2j,
                matrix: s_block(&p, &format!("B2_{j}"), z, (phi, 0.0), psi.map(|v| (v, 1.0)), mu2j, ez, n0, &[(s2j, -1.0)]),
            });
            let mut f = AffineScalar::new(format!("s1_{j} ≤ cap·s2_{j}"));
            f.add_scalar(&p, s2j, inst.rho_eav_cap).add_scalar(&p, s1j, -1.0);
            p.add_inequality(f);
            s1.push(s1j);
            s2.push(s2j);
            mu1.push(mu1j);
            mu2.push(mu2j);
        }
    }
    for blk in &blocks {
        p.add_lmi(blk.matrix.clone());
    }

    let mut obj = AffineScalar::new("r1 ≥ r·r2");
    obj.add_scalar(&p, r1, 1.0).add_scalar(&p, r2, -r);
    p.add_inequality(obj);

    let mut dec = AffineScalar::new("r3 ≤ (c − a_max)·r4");
    dec.add_scalar(&p, r4, c - a_max).add_scalar(&p, r3, -1.0);
    p.add_inequality(dec);

    let mut pow = AffineScalar::new("relay power");
    pow.add_constant(inst.pr_max).add_trace(&p, phi, -1.0);
    if let Some(psi) = psi {
        pow.add_trace(&p, psi, -1.0);
    }
    p.add_inequality(pow);

    Ok((
        p,
        RobustVars {
            phi,
            psi,
            r: [r1, r2, r3, r4],
            lambda,
            s1,
            s2,
            mu1,
            mu2,
            blocks,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustOutcome {
    pub outcome: SolveOutcome,
    pub solution: Option<RobustSolution>,
}

/// Gap tolerance for the minimum-trace polish of the returned witness.
const POLISH_GAP: f64 = 1e-10;

pub fn solve_robust_rate(inst: &RobustInstance, mi: &MiEvaluator, settings: &SolverSettings) -> Result<RobustOutcome> {
    let n = inst.antennas();
    let degenerate = |status| RobustOutcome {
        outcome: SolveOutcome::degenerate(n, inst.r0, status),
        solution: None,
    };
    if inst.relay_link_unusable() {
        return Ok(degenerate(OutcomeStatus::RelayLinkUnusable));
    }
    if inst.apriori_infeasible() {
        return Ok(degenerate(OutcomeStatus::RobustInfeasibleAtZero));
    }
    let opts = solver_options(settings);
    let check = |r: f64| -> Option<(Witness, LmiProblem, RobustVars, f64)> {
        let (p, vars) = build_robust_feasibility(inst, r).ok()?;
        let rep = solve_feasibility(&p, &opts);
        if rep.is_feasible() {
            Some((rep.witness?, p, vars, rep.max_violation))
        } else {
            None
        }
    };
    let c = inst.bounds.c;
    let out = match bisect_max(check, 0.0, c, settings.bisect_tol * c) {
        Ok(o) => o,
        Err(Error::InfeasibleAtLower(_)) => return Ok(degenerate(OutcomeStatus::RobustInfeasibleAtZero)),
        Err(e) => return Err(e),
    };
    let (w, p, vars, mut max_violation) = out.witness;
    let raw_phi = w.hermitian(&p, vars.phi);
    let (_, raw_rank_ratio) = extract_beamvector(&raw_phi);

    // Among feasible points at r_max, take the one with least signal power.
    let mut obj = AffineScalar::new("Tr Phi");
    obj.add_trace(&p, vars.phi, 1.0);
    let polish_opts = crate::sdp::SolverOptions {
        max_iter: 400,
        ..opts
    };
    let w = match minimize_linear(&p, &obj, &w, &polish_opts, POLISH_GAP) {
        Ok(pw) => {
            let rep = p.replay(&pw.x);
            if rep.max_violation <= settings.feas_tol {
                max_violation = rep.max_violation;
                pw
            } else {
                w
            }
        }
        Err(_) => w,
    };
    let sol = RobustSolution::from_witness(&p, &vars, &w);
    let (phi, rank_ratio) = extract_beamvector(&sol.phi);
    let r_max = out.value;
    Ok(RobustOutcome {
        outcome: SolveOutcome {
            t_max: r_max,
            power_used: sol.phi.trace() + sol.psi.trace(),
            phi_matrix: sol.phi.clone(),
            psi: sol.psi.clone(),
            phi,
            rank_ratio,
            raw_rank_ratio,
            secrecy_rate: (mi.half_rate(r_max)? - inst.r0).max(0.0),
            r0: inst.r0,
            status: OutcomeStatus::Ok,
            max_violation,
            probes: out.probes,
            monotone_ok: out.monotone_ok,
        },
        solution: Some(sol),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustPoint {
    pub eps: f64,
    /// Eavesdropper indices included.
    pub eavesdroppers: Vec<usize>,
    pub result: RobustOutcome,
}

/// Solves at every `(ε, eavesdropper set)` pair with all radii equal to ε,
/// in parallel; results are in grid order (ε-major).
pub fn sweep_eps(
    ch: &ChannelSet,
    pw: &PowerConfig,
    mi: &MiEvaluator,
    r0: f64,
    eps_grid: &[f64],
    sets: &[Vec<usize>],
    use_an: bool,
    settings: &SolverSettings,
) -> Result<Vec<RobustPoint>> {
    let jobs: Vec<(f64, &Vec<usize>)> = eps_grid.iter().flat_map(|&e| sets.iter().map(move |s| (e, s))).collect();
    jobs.into_par_iter()
        .map(|(eps, set)| {
            let sub = ch.with_eavesdroppers(set);
            let radii = UncertaintyRadii::uniform(eps, set.len());
            let inst = RobustInstance::new(&sub, &radii, pw, mi, r0, use_an)?;
            Ok(RobustPoint {
                eps,
                eavesdroppers: set.clone(),
                result: solve_robust_rate(&inst, mi, settings)?,
            })
        })
        .collect()
}
