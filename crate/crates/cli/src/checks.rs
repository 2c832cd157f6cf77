//! Oracle comparisons and the invariant suite.

use serde::Serialize;

use relaysec::oracle::{beamformer_search, mi_monte_carlo, s_procedure_soundness, OracleConfig};
use relaysec::perfect::{solve_rate, verify_kkt, PerfectInstance};
use relaysec::robust::{solve_robust_rate, RobustInstance};
use relaysec::{OutcomeStatus, UncertaintyRadii};

use crate::output::{emit, json_with_manifest};
use crate::sweeps::set_label;
use crate::{CliResult, Context, Failure, OracleMode};

pub const MI_CHECK_RHOS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
pub const RANK_TOL: f64 = 1e-6;
/// KKT residual tolerance, relative to `max(1, P_R)`.
pub const KKT_TOL: f64 = 1e-6;
pub const SOUNDNESS_TOL: f64 = 1e-6;
/// Oracle agreement: `best − ABS ≤ t_max ≤ best·(1 + REL)`.
pub const ORACLE_ABS: f64 = 1e-3;
pub const ORACLE_REL: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Report {
    fn new(checks: Vec<Check>, notes: Vec<String>) -> Self {
        Self {
            passed: checks.iter().all(|c| c.passed),
            checks,
            notes,
        }
    }

    fn finish(self, ctx: &Context) -> CliResult<()> {
        emit(ctx.global.out.as_deref(), &json_with_manifest(&ctx.manifest, &self)?)?;
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::solver(format!("failed checks: {}", failed.join(", "))))
        }
    }
}

fn oracle_config(ctx: &Context) -> OracleConfig {
    OracleConfig {
        seed: ctx.global.seed,
        ..OracleConfig::default()
    }
}

/// Quadrature against Monte-Carlo, within 3σ.
pub fn mi_checks(ctx: &Context, cfg: &OracleConfig) -> CliResult<Vec<Check>> {
    MI_CHECK_RHOS
        .iter()
        .map(|&rho| {
            let q = ctx.mi.mutual_information(rho)?;
            let (est, se) = mi_monte_carlo(ctx.mi.alphabet(), rho, cfg)?;
            let z = (q - est).abs() / se.max(1e-300);
            Ok(Check::new(
                format!("mi quadrature vs monte-carlo rho={rho}"),
                z <= 3.0,
                format!("quadrature={q:.10} mc={est:.10} se={se:.3e} z={z:.2}"),
            ))
        })
        .collect()
}

/// SDP `t_max` against the beamformer search for every eavesdropper set.
pub fn search_checks(ctx: &Context, r0: f64, cfg: &OracleConfig) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for set in &ctx.scenario.eavesdropper_sets {
        let (ch, _) = ctx.scenario.subset(set);
        let inst = PerfectInstance::new(&ch, &ctx.scenario.power, &ctx.mi, r0, true)?;
        let sdp = solve_rate(&inst, &ctx.mi, &ctx.settings)?;
        let name = format!("oracle dominance {} R0={r0}", set_label(set));
        let check = match beamformer_search(&inst, cfg) {
            Some(s) => {
                let ok = sdp.t_max >= s.t - ORACLE_ABS && sdp.t_max <= s.t * (1.0 + ORACLE_REL);
                Check::new(name, ok, format!("sdp={:.9} oracle={:.9}", sdp.t_max, s.t))
            }
            None => Check::new(
                name,
                sdp.t_max <= ORACLE_ABS || sdp.status != OutcomeStatus::Ok,
                format!("oracle found no feasible point; sdp={:.9}", sdp.t_max),
            ),
        };
        out.push(check);
    }
    Ok(out)
}

/// Robust solutions at radius `eps` checked against sampled and exact
/// worst-case channel errors.
pub fn worstcase_checks(ctx: &Context, r0: f64, eps: f64, cfg: &OracleConfig) -> CliResult<(Vec<Check>, Vec<String>)> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for set in &ctx.scenario.eavesdropper_sets {
        let (ch, _) = ctx.scenario.subset(set);
        let radii = UncertaintyRadii::uniform(eps, set.len());
        soundness(ctx, set, &ch, &radii, r0, cfg, &mut checks, &mut notes)?;
    }
    Ok((checks, notes))
}

#[allow(clippy::too_many_arguments)]
fn soundness(
    ctx: &Context,
    set: &[usize],
    ch: &relaysec::ChannelSet,
    radii: &UncertaintyRadii,
    r0: f64,
    cfg: &OracleConfig,
    checks: &mut Vec<Check>,
    notes: &mut Vec<String>,
) -> CliResult<()> {
    let label = set_label(set);
    let inst = RobustInstance::new(ch, radii, &ctx.scenario.power, &ctx.mi, r0, true)?;
    let out = solve_robust_rate(&inst, &ctx.mi, &ctx.settings)?;
    match out.solution {
        Some(sol) => {
            let rep = s_procedure_soundness(&inst, &sol, cfg);
            checks.push(Check::new(
                format!("s-procedure soundness {label}"),
                rep.max_violation <= SOUNDNESS_TOL,
                format!("max violation {:.3e} over {} draws per ball", rep.max_violation, cfg.error_samples),
            ));
            checks.push(Check::new(
                format!("robust rank-1 {label}"),
                out.outcome.rank_ratio <= RANK_TOL,
                format!("lambda2/lambda1 = {:.3e}", out.outcome.rank_ratio),
            ));
        }
        None => notes.push(format!("{label}: {}", out.outcome.status)),
    }
    Ok(())
}

pub fn oracle_check(ctx: &Context, mode: OracleMode, r0: f64, eps: f64, samples: Option<usize>) -> CliResult<()> {
    let mut cfg = oracle_config(ctx);
    if let Some(n) = samples {
        match mode {
            OracleMode::Mi => cfg.mc_samples = n,
            OracleMode::Search => cfg.search_samples = n,
            OracleMode::Worstcase => cfg.error_samples = n,
        }
    }
    cfg.validate()?;
    if !(eps >= 0.0) {
        return Err(Failure::input(format!("--eps must be nonnegative, got {eps}")));
    }
    let (checks, notes) = match mode {
        OracleMode::Mi => (mi_checks(ctx, &cfg)?, vec![]),
        OracleMode::Search => (search_checks(ctx, r0, &cfg)?, vec![]),
        OracleMode::Worstcase => worstcase_checks(ctx, r0, eps, &cfg)?,
    };
    Report::new(checks, notes).finish(ctx)
}

/// Closed-form properties of `I(ρ)` on a fixed grid.
pub fn mi_property_checks(ctx: &Context) -> CliResult<Vec<Check>> {
    let mi = &ctx.mi;
    let max = mi.max_bits();
    let grid: Vec<f64> = (0..=300).map(|i| i as f64 * 0.1).collect();
    let v = grid
        .iter()
        .map(|&r| mi.mutual_information(r))
        .collect::<relaysec::Result<Vec<_>>>()?;
    let zero = v[0];
    let bounded = v.iter().all(|&x| (0.0..=max + 1e-12).contains(&x));
    let monotone = v.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let concave = v.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-9);
    let high = mi.mutual_information(100.0)?;
    let mut round_trip = 0.0f64;
    for target in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let y = target * max;
        let rho = mi.inverse_mi(y)?;
        round_trip = round_trip.max((mi.mutual_information(rho)? - y).abs());
    }
    Ok(vec![
        Check::new("mi zero at rho=0", zero == 0.0, format!("I(0) = {zero}")),
        Check::new("mi bounded", bounded, format!("0 <= I <= {max} on [0, 30]")),
        Check::new("mi monotone", monotone, "non-decreasing on a 0.1 grid over [0, 30]"),
        Check::new("mi concave", concave, "second differences <= 1e-9 on the same grid"),
        Check::new(
            "mi saturates",
            (high - max).abs() <= 1e-3,
            format!("I(100) = {high:.9}"),
        ),
        Check::new("mi inverse round trip", round_trip <= 1e-9, format!("max error {round_trip:.3e}")),
    ])
}

pub fn validate(ctx: &Context, r0: f64) -> CliResult<()> {
    if !(r0 >= 0.0) {
        return Err(Failure::input(format!("R0 must be nonnegative, got {r0}")));
    }
    let cfg = oracle_config(ctx);
    let mut checks = mi_property_checks(ctx)?;
    let mut notes = Vec::new();

    for set in &ctx.scenario.eavesdropper_sets {
        let label = set_label(set);
        let (ch, radii) = ctx.scenario.subset(set);
        for an in [true, false] {
            let inst = PerfectInstance::new(&ch, &ctx.scenario.power, &ctx.mi, r0, an)?;
            let out = solve_rate(&inst, &ctx.mi, &ctx.settings)?;
            let tag = format!("{label} AN={}", if an { "on" } else { "off" });
            if out.status != OutcomeStatus::Ok {
                notes.push(format!("perfect {tag}: {}", out.status));
                continue;
            }
            checks.push(Check::new(
                format!("perfect rank-1 {tag}"),
                out.rank_ratio <= RANK_TOL,
                format!("lambda2/lambda1 = {:.3e}", out.rank_ratio),
            ));
            let kkt = verify_kkt(&out, &inst, KKT_TOL * inst.pr_max.max(1.0));
            checks.push(Check::new(
                format!("perfect kkt {tag}"),
                kkt.passed,
                serde_json::to_string(&kkt).unwrap_or_default(),
            ));
        }
        let radii_zero = radii == UncertaintyRadii::zero(set.len());
        if !radii_zero {
            soundness(ctx, set, &ch, &radii, r0, &cfg, &mut checks, &mut notes)?;
        }
    }
    checks.extend(search_checks(ctx, r0, &cfg)?);
    Report::new(checks, notes).finish(ctx)
}
