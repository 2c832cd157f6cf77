//! Secrecy-rate maximization with perfect CSI.
//!
//! For a fixed common-message rate `R0` each eavesdropper's composite SNR
//! is capped at `I⁻¹(2R0)`; the destination SNR `t` is maximized by
//! bisection over the rank-relaxed feasibility problem in `(Φ, Ψ)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::MiEvaluator;
use crate::channel::{scalar_bounds_perfect, ChannelSet, PowerConfig, ScalarBounds};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::outcome::{extract_beamvector, OutcomeStatus, SolveOutcome};
use crate::scenario::SolverSettings;
use crate::sdp::{bisect_max, solve_feasibility, AffineScalar, HermVar, LmiProblem, SolverOptions, Witness};

#[derive(Debug, Clone)]
pub struct PerfectInstance {
    pub bounds: ScalarBounds,
    pub h: Vec<Complex64>,
    pub z: Vec<Vec<Complex64>>,
    pub n0: f64,
    pub pr_max: f64,
    /// `I⁻¹(2R0)`; `+∞` when the eavesdropper constraint is vacuous.
    pub rho_eav_cap: f64,
    pub r0: f64,
    pub use_an: bool,
}

impl PerfectInstance {
    pub fn new(
        ch: &ChannelSet,
        pw: &PowerConfig,
        mi: &MiEvaluator,
        r0: f64,
        use_an: bool,
    ) -> Result<Self> {
        if !(r0 >= 0.0) {
            return Err(Error::Domain(format!("R0 must be nonnegative, got {r0}")));
        }
        Ok(Self {
            bounds: scalar_bounds_perfect(ch, pw),
            h: ch.h.clone(),
            z: ch.z.clone(),
            n0: pw.n0,
            pr_max: pw.pr_max,
            rho_eav_cap: mi.inverse_mi(2.0 * r0)?,
            r0,
            use_an,
        })
    }

    pub fn antennas(&self) -> usize {
        self.h.len()
    }

    /// Some eavesdropper already exceeds the cap through its direct link.
    pub fn apriori_infeasible(&self) -> bool {
        self.bounds.b.iter().any(|&b| b >= self.rho_eav_cap)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PerfectVars {
    pub phi: HermVar,
    pub psi: Option<HermVar>,
}

/// Adds `coef·(N0 + v Ψ v*)` (just `coef·N0` without AN).
fn add_noise_term(f: &mut AffineScalar, p: &LmiProblem, psi: Option<HermVar>, coef: f64, n0: f64, v: &[Complex64]) {
    f.add_constant(coef * n0);
    if let Some(psi) = psi {
        f.add_quad(p, psi, coef, v);
    }
}

/// Feasibility problem at destination SNR `t`.
pub fn build_feasibility(inst: &PerfectInstance, t: f64) -> Result<(LmiProblem, PerfectVars)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    if inst.apriori_infeasible() {
        return Err(Error::InfeasibleAtLower(format!(
            "eavesdropper direct link exceeds the cap {:.6e}",
            inst.rho_eav_cap
        )));
    }
    let n = inst.antennas();
    let ScalarBounds { a, c, ref b, .. } = inst.bounds;
    let mut p = LmiProblem::new();
    let phi = p.psd_var("Phi", n);
    let psi = inst.use_an.then(|| p.psd_var("Psi", n));

    let mut dest = AffineScalar::new("destination SNR ≥ t");
    dest.add_quad(&p, phi, 1.0, &inst.h);
    add_noise_term(&mut dest, &p, psi, -(t - a), inst.n0, &inst.h);
    p.add_inequality(dest);

    if inst.rho_eav_cap.is_finite() {
        for (j, (z, bj)) in inst.z.iter().zip(b).enumerate() {
            let mut f = AffineScalar::new(format!("eavesdropper {j} SNR ≤ cap"));
            add_noise_term(&mut f, &p, psi, inst.rho_eav_cap - bj, inst.n0, z);
            f.add_quad(&p, phi, -1.0, z);
            p.add_inequality(f);
        }
    }

    let mut dec = AffineScalar::new("relay decodability");
    add_noise_term(&mut dec, &p, psi, c - a, inst.n0, &inst.h);
    dec.add_quad(&p, phi, -1.0, &inst.h);
    p.add_inequality(dec);

    let mut pow = AffineScalar::new("relay power");
    pow.add_constant(inst.pr_max).add_trace(&p, phi, -1.0);
    if let Some(psi) = psi {
        pow.add_trace(&p, psi, -1.0);
    }
    p.add_inequality(pow);
    Ok((p, PerfectVars { phi, psi }))
}

pub fn solver_options(settings: &SolverSettings) -> SolverOptions {
    SolverOptions {
        feas_tol: settings.feas_tol,
        ..SolverOptions::default()
    }
}

/// `Φ h* h Φ / (h Φ h*)`: keeps `hΦh*`, does not increase any other
/// quadratic form or the trace, and has rank one.
pub fn purify_rank_one(phi: &HermitianMatrix, h: &[Complex64]) -> HermitianMatrix {
    let n = phi.dim();
    let denom = phi.quad_form(h);
    if !(denom > 0.0) {
        return phi.clone();
    }
    let u: Vec<Complex64> = (0..n)
        .map(|i| (0..n).map(|j| phi.get(i, j) * h[j].conj()).sum())
        .collect();
    HermitianMatrix::outer(&u).scale(1.0 / denom)
}

pub fn solve_rate(inst: &PerfectInstance, mi: &MiEvaluator, settings: &SolverSettings) -> Result<SolveOutcome> {
    let n = inst.antennas();
    if inst.apriori_infeasible() {
        return Ok(SolveOutcome::degenerate(n, inst.r0, OutcomeStatus::EavDirectLinkExceedsR0));
    }
    if inst.bounds.c <= inst.bounds.a {
        return Ok(SolveOutcome::degenerate(n, inst.r0, OutcomeStatus::DirectLinkDominates));
    }
    let opts = solver_options(settings);
    let check = |t: f64| -> Option<(Witness, LmiProblem, PerfectVars, f64)> {
        let (p, vars) = build_feasibility(inst, t).ok()?;
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
        Err(Error::InfeasibleAtLower(_)) => {
            return Ok(SolveOutcome::degenerate(n, inst.r0, OutcomeStatus::EavDirectLinkExceedsR0))
        }
        Err(e) => return Err(e),
    };
    let (w, p, vars, max_violation) = out.witness;
    let raw_phi = w.hermitian(&p, vars.phi);
    let psi = vars.psi.map_or_else(|| HermitianMatrix::zeros(n), |v| w.hermitian(&p, v));
    let (_, raw_rank_ratio) = extract_beamvector(&raw_phi);
    let phi_matrix = purify_rank_one(&raw_phi, &inst.h);
    let (phi, rank_ratio) = extract_beamvector(&phi_matrix);
    let t_max = out.value;
    Ok(SolveOutcome {
        t_max,
        power_used: phi_matrix.trace() + psi.trace(),
        phi_matrix,
        psi,
        phi,
        rank_ratio,
        raw_rank_ratio,
        secrecy_rate: (mi.half_rate(t_max)? - inst.r0).max(0.0),
        r0: inst.r0,
        status: OutcomeStatus::Ok,
        max_violation,
        probes: out.probes,
        monotone_ok: out.monotone_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    /// `½ I(Ps_max ‖g‖² / N0)`, the top of the `R0` grid.
    pub r_d: f64,
    pub delta: f64,
    pub source_power: f64,
    pub outcomes: Vec<SolveOutcome>,
    pub argmax: usize,
}

impl Sweep {
    pub fn argmax_r0(&self) -> f64 {
        self.outcomes[self.argmax].r0
    }

    pub fn max_rate(&self) -> f64 {
        self.outcomes[self.argmax].secrecy_rate
    }
}

/// Upper end of the `R0` grid.
pub fn r0_upper(ch: &ChannelSet, pw: &PowerConfig, mi: &MiEvaluator) -> Result<f64> {
    let g2: f64 = ch.g.iter().map(|z| z.norm_sqr()).sum();
    mi.half_rate(pw.ps_max * g2 / pw.n0)
}

/// Solves at `R0 ∈ {0, Δ, …, LΔ}` with `Δ = R_D/L`, in parallel. The
/// argmax is the first grid point attaining the maximum rate.
pub fn sweep_r0(
    ch: &ChannelSet,
    pw: &PowerConfig,
    mi: &MiEvaluator,
    l: usize,
    use_an: bool,
    settings: &SolverSettings,
) -> Result<Sweep> {
    if l < 1 {
        return Err(Error::Domain("grid size L must be >= 1".into()));
    }
    let r_d = r0_upper(ch, pw, mi)?;
    let delta = r_d / l as f64;
    let outcomes = (0..=l)
        .into_par_iter()
        .map(|k| {
            let inst = PerfectInstance::new(ch, pw, mi, k as f64 * delta, use_an)?;
            solve_rate(&inst, mi, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = argmax_first(outcomes.iter().map(|o| o.secrecy_rate));
    Ok(Sweep {
        r_d,
        delta,
        source_power: pw.ps,
        outcomes,
        argmax,
    })
}

pub(crate) fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Sweeps `R0` at each source power `Ps = kΔ₂`, `Δ₂ = Ps_max/K`, and
/// returns the sweep with the largest secrecy rate.
pub fn sweep_ps_r0(
    ch: &ChannelSet,
    pw: &PowerConfig,
    mi: &MiEvaluator,
    l: usize,
    k: usize,
    use_an: bool,
    settings: &SolverSettings,
) -> Result<Vec<Sweep>> {
    if k < 1 {
        return Err(Error::Domain("grid size K must be >= 1".into()));
    }
    let d2 = pw.ps_max / k as f64;
    (1..=k)
        .map(|i| sweep_r0(ch, &pw.with_source_power(i as f64 * d2), mi, l, use_an, settings))
        .collect()
}

/// Residuals of the optimality conditions at a solved point.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    /// Destination SNR at the witness minus `t_max` (≥ 0, ≈ 0 when active).
    pub destination_residual: f64,
    /// `c − (a + hΦh*/(N0 + hΨh*))`.
    pub decodability_slack: f64,
    pub power_used: f64,
    /// `P_R − power_used`.
    pub power_gap: f64,
    /// Full relay power is expected when the decodability constraint is
    /// slack (beyond `tol`) and AN is enabled, so that surplus power always
    /// has a harmless direction. Without AN the power multiplier may vanish.
    pub saturation_expected: bool,
    pub t_exceeds_a: bool,
    /// Largest eavesdropper composite SNR minus the cap (≤ 0 when feasible).
    pub eavesdropper_margin: f64,
    pub passed: bool,
}

/// Destination composite SNR `a + hΦh*/(N0 + hΨh*)`.
pub fn destination_snr(inst: &PerfectInstance, phi: &HermitianMatrix, psi: &HermitianMatrix) -> f64 {
    inst.bounds.a + phi.quad_form(&inst.h) / (inst.n0 + psi.quad_form(&inst.h))
}

/// Eavesdropper composite SNRs `bⱼ + zⱼΦzⱼ*/(N0 + zⱼΨzⱼ*)`.
pub fn eavesdropper_snrs(inst: &PerfectInstance, phi: &HermitianMatrix, psi: &HermitianMatrix) -> Vec<f64> {
    inst.z
        .iter()
        .zip(&inst.bounds.b)
        .map(|(z, b)| b + phi.quad_form(z) / (inst.n0 + psi.quad_form(z)))
        .collect()
}

pub fn verify_kkt(out: &SolveOutcome, inst: &PerfectInstance, tol: f64) -> KktReport {
    let snr = destination_snr(inst, &out.phi_matrix, &out.psi);
    let destination_residual = snr - out.t_max;
    let decodability_slack = inst.bounds.c - snr;
    let power_gap = inst.pr_max - out.power_used;
    let saturation_expected = decodability_slack > tol && inst.use_an;
    let eavesdropper_margin = if inst.rho_eav_cap.is_finite() {
        eavesdropper_snrs(inst, &out.phi_matrix, &out.psi)
            .into_iter()
            .map(|s| s - inst.rho_eav_cap)
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::NEG_INFINITY
    };
    let t_exceeds_a = out.t_max > inst.bounds.a || out.phi_matrix.trace() <= tol;
    let passed = destination_residual.abs() <= tol
        && (!saturation_expected || power_gap.abs() <= tol)
        && t_exceeds_a
        && eavesdropper_margin <= tol;
    KktReport {
        destination_residual,
        decodability_slack,
        power_used: out.power_used,
        power_gap,
        saturation_expected,
        t_exceeds_a,
        eavesdropper_margin,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn instance(j: usize, r0: f64, use_an: bool) -> (PerfectInstance, MiEvaluator) {
        let s = Scenario::reference();
        let idx: Vec<usize> = (0..j).collect();
        let (ch, _) = s.subset(&idx);
        let mi = MiEvaluator::bpsk();
        (PerfectInstance::new(&ch, &s.power, &mi, r0, use_an).unwrap(), mi)
    }

    #[test]
    fn zero_t_vacuous_cap_feasible() {
        let (inst, _) = instance(1, 0.6, true);
        assert!(inst.rho_eav_cap.is_infinite());
        let (p, _) = build_feasibility(&inst, 0.0).unwrap();
        assert!(solve_feasibility(&p, &SolverOptions::default()).is_feasible());
    }

    #[test]
    fn above_c_is_infeasible() {
        let (inst, _) = instance(1, 0.6, true);
        let (p, _) = build_feasibility(&inst, inst.bounds.c + 0.1).unwrap();
        let r = solve_feasibility(&p, &SolverOptions::default());
        assert_eq!(r.status, crate::sdp::FeasibilityStatus::Infeasible);
    }

    #[test]
    fn zero_r0_is_apriori_infeasible() {
        let (inst, mi) = instance(2, 0.0, true);
        assert!(inst.apriori_infeasible());
        let out = solve_rate(&inst, &mi, &SolverSettings::default()).unwrap();
        assert_eq!(out.status, OutcomeStatus::EavDirectLinkExceedsR0);
        assert_eq!(out.secrecy_rate, 0.0);
    }

    #[test]
    fn purification_preserves_destination_term() {
        let phi = HermitianMatrix::identity(2).add(&HermitianMatrix::outer(&[
            Complex64::new(1.0, 0.5),
            Complex64::new(0.0, -1.0),
        ]));
        let h = [Complex64::new(0.3, -0.2), Complex64::new(0.7, 0.1)];
        let z = [Complex64::new(-0.4, 0.9), Complex64::new(0.2, 0.2)];
        let p = purify_rank_one(&phi, &h);
        assert!((p.quad_form(&h) - phi.quad_form(&h)).abs() < 1e-12);
        assert!(p.quad_form(&z) <= phi.quad_form(&z) + 1e-12);
        assert!(p.trace() <= phi.trace() + 1e-12);
        assert!(extract_beamvector(&p).1 < 1e-12);
    }
}
