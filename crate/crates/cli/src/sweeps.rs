//! Table and sweep commands.

use rayon::prelude::*;
use serde::Serialize;

use relaysec::perfect::{r0_upper, solve_rate, PerfectInstance};
use relaysec::robust::{solve_robust_rate, RobustInstance};
use relaysec::{MiEvaluator, SolveOutcome, UncertaintyRadii};

use crate::output::{emit, json_with_manifest, out_dir, sig9, CsvDoc};
use crate::{parse_alphabet, AnMode, CliResult, Context, Failure};

/// Status written for a grid point whose solve returned an error.
pub const SOLVER_FAILURE: &str = "solver_failure";

/// One solved grid point, or the error that stopped it.
#[derive(Debug, Clone, Serialize)]
pub struct Point {
    pub r0: f64,
    pub rs: f64,
    pub t_max: f64,
    pub rank_ratio: f64,
    pub power_used: f64,
    pub status: String,
}

impl Point {
    fn from_outcome(o: &SolveOutcome) -> Self {
        Self {
            r0: o.r0,
            rs: o.secrecy_rate,
            t_max: o.t_max,
            rank_ratio: o.rank_ratio,
            power_used: o.power_used,
            status: o.status.as_str().to_string(),
        }
    }

    fn failed(r0: f64, err: &relaysec::Error) -> Self {
        eprintln!("warning: R0={r0}: {err}");
        Self {
            r0,
            rs: f64::NAN,
            t_max: f64::NAN,
            rank_ratio: f64::NAN,
            power_used: f64::NAN,
            status: SOLVER_FAILURE.into(),
        }
    }

    pub fn ok(&self) -> bool {
        self.status != SOLVER_FAILURE
    }
}

/// A perfect-CSI curve over `R0 = kΔ`, `k = 0..=L`.
#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub label: String,
    pub eavesdroppers: Vec<usize>,
    pub an: bool,
    pub source_power: f64,
    pub delta: f64,
    pub points: Vec<Point>,
}

impl Curve {
    /// First grid point attaining the largest rate.
    pub fn argmax(&self) -> Option<&Point> {
        self.points
            .iter()
            .filter(|p| p.ok())
            .fold(None, |best: Option<&Point>, p| match best {
                Some(b) if b.rs >= p.rs => Some(b),
                _ => Some(p),
            })
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.ok()).count()
    }
}

/// `J3` for the prefix `{0,1,2}`, `E0-2` otherwise.
pub fn set_label(set: &[usize]) -> String {
    if set.iter().enumerate().all(|(i, &e)| i == e) {
        format!("J{}", set.len())
    } else {
        let idx: Vec<String> = set.iter().map(usize::to_string).collect();
        format!("E{}", idx.join("-"))
    }
}

fn an_label(an: bool) -> &'static str {
    if an {
        "on"
    } else {
        "off"
    }
}

fn grid_size(ctx: &Context, l: Option<usize>) -> CliResult<usize> {
    let l = l.unwrap_or(ctx.settings.grid_l);
    if l < 1 {
        return Err(Failure::input("--L must be >= 1"));
    }
    Ok(l)
}

/// Perfect-CSI curve at one source power; failed points are kept with
/// their status and the sweep continues.
fn curve_at(ctx: &Context, set: &[usize], an: bool, ps: f64, l: usize) -> CliResult<Curve> {
    let (ch, _) = ctx.scenario.subset(set);
    let pw = ctx.scenario.power.with_source_power(ps);
    let mi = &ctx.mi;
    let delta = r0_upper(&ch, &pw, mi)? / l as f64;
    let points = (0..=l)
        .into_par_iter()
        .map(|k| {
            let r0 = k as f64 * delta;
            let inst = PerfectInstance::new(&ch, &pw, mi, r0, an)?;
            Ok(match solve_rate(&inst, mi, &ctx.settings) {
                Ok(o) => Point::from_outcome(&o),
                Err(e) => Point::failed(r0, &e),
            })
        })
        .collect::<relaysec::Result<Vec<_>>>()?;
    Ok(Curve {
        label: set_label(set),
        eavesdroppers: set.to_vec(),
        an,
        source_power: ps,
        delta,
        points,
    })
}

/// The curve at the scenario's source power, or, with `grid_K > 1`, the
/// best curve over `Ps ∈ {Ps_max/K, …, Ps_max}`.
pub fn curve(ctx: &Context, set: &[usize], an: bool, l: usize) -> CliResult<Curve> {
    let k = ctx.settings.grid_k;
    if k <= 1 {
        return curve_at(ctx, set, an, ctx.scenario.power.ps, l);
    }
    let step = ctx.scenario.power.ps_max / k as f64;
    let mut best: Option<Curve> = None;
    for i in 1..=k {
        let c = curve_at(ctx, set, an, i as f64 * step, l)?;
        let rate = c.argmax().map_or(f64::NEG_INFINITY, |p| p.rs);
        if best.as_ref().and_then(Curve::argmax).is_none_or(|b| rate > b.rs) {
            best = Some(c);
        }
    }
    Ok(best.expect("K >= 1"))
}

pub fn mi_table(
    ctx: &Context,
    alphabet: Option<&str>,
    rho_min: f64,
    rho_max: f64,
    points: usize,
    log: bool,
) -> CliResult<()> {
    let mi = match alphabet {
        Some(a) => MiEvaluator::new(parse_alphabet(a)?, ctx.settings.quad_order)?,
        None => ctx.mi.clone(),
    };
    if !(rho_min >= 0.0 && rho_max >= rho_min && rho_max.is_finite()) || points < 2 {
        return Err(Failure::input("need 0 <= rho-min <= rho-max and points >= 2"));
    }
    if log && rho_min <= 0.0 {
        return Err(Failure::input("--log requires rho-min > 0"));
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            if log {
                rho_min * (rho_max / rho_min).powf(f)
            } else {
                rho_min + f * (rho_max - rho_min)
            }
        })
        .collect();
    let values = grid
        .iter()
        .map(|&r| mi.mutual_information(r))
        .collect::<relaysec::Result<Vec<_>>>()?;
    let mut doc = CsvDoc::new(&ctx.manifest);
    doc.comment(&format!("alphabet: {}", mi.alphabet().name()));
    doc.row(&["rho", "I_bits"]);
    for (r, v) in grid.iter().zip(&values) {
        doc.row(&[sig9(*r), sig9(*v)]);
    }
    emit(ctx.global.out.as_deref(), doc.as_str())?;
    Ok(())
}

pub fn perfect_sweep(ctx: &Context, an: AnMode, l: Option<usize>) -> CliResult<()> {
    let l = grid_size(ctx, l)?;
    let mut doc = CsvDoc::new(&ctx.manifest);
    let mut failures = 0;
    for set in &ctx.scenario.eavesdropper_sets {
        for use_an in an.flags() {
            let c = curve(ctx, set, use_an, l)?;
            failures += c.failures();
            doc.comment(&format!(
                "block: {} eavesdroppers={:?} AN={} Ps={}",
                c.label,
                c.eavesdroppers,
                an_label(use_an),
                sig9(c.source_power)
            ));
            doc.row(&["R0", "Rs", "t_max", "rank_ratio", "power_used", "status"]);
            for p in &c.points {
                doc.row(&[
                    sig9(p.r0),
                    sig9(p.rs),
                    sig9(p.t_max),
                    sig9(p.rank_ratio),
                    sig9(p.power_used),
                    p.status.clone(),
                ]);
            }
        }
    }
    emit(ctx.global.out.as_deref(), doc.as_str())?;
    failed_points(failures)
}

fn failed_points(n: usize) -> CliResult<()> {
    if n == 0 {
        Ok(())
    } else {
        Err(Failure::solver(format!("{n} grid point(s) failed; see status column")))
    }
}

/// One robust solve on the `(ε, set)` grid.
#[derive(Debug, Clone, Serialize)]
pub struct RobustRow {
    pub eps: f64,
    pub label: String,
    pub eavesdroppers: Vec<usize>,
    pub rs_lower: f64,
    pub r_max: f64,
    pub rank_ratio: f64,
    pub status: String,
}

/// Sorted copy of `eps`, warning on stderr when the input was unsorted.
pub fn sorted_grid(eps: &[f64]) -> Vec<f64> {
    let mut v = eps.to_vec();
    if v.windows(2).any(|w| w[0] > w[1]) {
        eprintln!("warning: eps grid was not sorted; sorting");
        v.sort_by(f64::total_cmp);
    }
    v
}

pub fn robust_rows(ctx: &Context, r0: f64, eps: &[f64], use_an: bool) -> CliResult<Vec<RobustRow>> {
    if !(r0 >= 0.0) {
        return Err(Failure::input(format!("R0 must be nonnegative, got {r0}")));
    }
    let pw = &ctx.scenario.power;
    let jobs: Vec<(f64, &Vec<usize>)> = eps
        .iter()
        .flat_map(|&e| ctx.scenario.eavesdropper_sets.iter().map(move |s| (e, s)))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(e, set)| {
            let (ch, _) = ctx.scenario.subset(set);
            let inst = RobustInstance::new(&ch, &UncertaintyRadii::uniform(e, set.len()), pw, &ctx.mi, r0, use_an)?;
            let (rs_lower, r_max, rank_ratio, status) = match solve_robust_rate(&inst, &ctx.mi, &ctx.settings) {
                Ok(o) => {
                    let o = o.outcome;
                    (o.secrecy_rate, o.t_max, o.rank_ratio, o.status.as_str().to_string())
                }
                Err(err) => {
                    eprintln!("warning: eps={e} {}: {err}", set_label(set));
                    (f64::NAN, f64::NAN, f64::NAN, SOLVER_FAILURE.to_string())
                }
            };
            Ok(RobustRow {
                eps: e,
                label: set_label(set),
                eavesdroppers: set.clone(),
                rs_lower,
                r_max,
                rank_ratio,
                status,
            })
        })
        .collect::<relaysec::Result<Vec<_>>>()?;
    Ok(rows)
}

pub fn robust_sweep(ctx: &Context, r0: f64, eps: &[f64], use_an: bool) -> CliResult<()> {
    let eps = sorted_grid(eps);
    let rows = robust_rows(ctx, r0, &eps, use_an)?;
    let mut doc = CsvDoc::new(&ctx.manifest);
    doc.comment(&format!("R0={} AN={}", sig9(r0), an_label(use_an)));
    doc.row(&["eps", "J", "Rs_lower", "r_max", "rank_ratio", "status"]);
    for r in &rows {
        doc.row(&[
            sig9(r.eps),
            r.eavesdroppers.len().to_string(),
            sig9(r.rs_lower),
            sig9(r.r_max),
            sig9(r.rank_ratio),
            r.status.clone(),
        ]);
    }
    emit(ctx.global.out.as_deref(), doc.as_str())?;
    failed_points(rows.iter().filter(|r| r.status == SOLVER_FAILURE).count())
}

#[derive(Debug, Serialize)]
pub struct CurveSummary {
    pub file: String,
    pub label: String,
    pub eavesdroppers: Vec<usize>,
    pub an: bool,
    pub source_power: f64,
    pub delta: f64,
    pub argmax_r0: Option<f64>,
    pub max_rs: Option<f64>,
    pub max_rank_ratio: f64,
    pub failed_points: usize,
}

#[derive(Debug, Serialize)]
pub struct Fig2Summary {
    pub grid_intervals: usize,
    pub curves: Vec<CurveSummary>,
}

pub fn fig2(ctx: &Context, l: Option<usize>) -> CliResult<()> {
    let l = grid_size(ctx, l)?;
    let dir = out_dir(ctx.global.out.as_deref())?;
    let mut curves = Vec::new();
    let mut failures = 0;
    for set in &ctx.scenario.eavesdropper_sets {
        for use_an in [true, false] {
            let c = curve(ctx, set, use_an, l)?;
            let file = format!("fig2_{}_an_{}.csv", c.label, an_label(use_an));
            let mut doc = CsvDoc::new(&ctx.manifest);
            doc.row(&["R0", "Rs"]);
            for p in &c.points {
                doc.row(&[sig9(p.r0), sig9(p.rs)]);
            }
            emit(Some(&dir.join(&file)), doc.as_str())?;
            failures += c.failures();
            let best = c.argmax();
            curves.push(CurveSummary {
                file,
                label: c.label.clone(),
                eavesdroppers: c.eavesdroppers.clone(),
                an: use_an,
                source_power: c.source_power,
                delta: c.delta,
                argmax_r0: best.map(|p| p.r0),
                max_rs: best.map(|p| p.rs),
                max_rank_ratio: c
                    .points
                    .iter()
                    .filter(|p| p.ok())
                    .map(|p| p.rank_ratio)
                    .fold(0.0, f64::max),
                failed_points: c.failures(),
            });
        }
    }
    let summary = Fig2Summary {
        grid_intervals: l,
        curves,
    };
    emit(
        Some(&dir.join("fig2_summary.json")),
        &json_with_manifest(&ctx.manifest, &summary)?,
    )?;
    failed_points(failures)
}

#[derive(Debug, Serialize)]
pub struct Fig3SetSummary {
    pub label: String,
    pub eavesdroppers: Vec<usize>,
    pub rs_lower: Vec<f64>,
    /// Rs lower bound non-increasing along the sorted ε grid.
    pub non_increasing_in_eps: bool,
    /// Perfect-CSI `t_max` at the same R0, when the grid contains ε = 0.
    pub perfect_t_max: Option<f64>,
    pub robust_r_max_at_zero: Option<f64>,
    /// `|r_max(0) − t_max| ≤ 2·bisect_tol·c`.
    pub reduction_ok: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct Fig3Summary {
    pub r0: f64,
    pub an: bool,
    pub eps: Vec<f64>,
    pub sets: Vec<Fig3SetSummary>,
    /// For each ε, Rs lower bound non-increasing along the listed sets
    /// (meaningful when the sets are nested).
    pub non_increasing_in_j: Vec<bool>,
    pub tolerance: f64,
}

pub fn fig3(ctx: &Context, r0: f64, eps: &[f64], use_an: bool) -> CliResult<()> {
    let eps = sorted_grid(eps);
    let dir = out_dir(ctx.global.out.as_deref())?;
    let rows = robust_rows(ctx, r0, &eps, use_an)?;
    let sets = &ctx.scenario.eavesdropper_sets;
    let tol = 2.0 * ctx.settings.bisect_tol;

    let mut doc = CsvDoc::new(&ctx.manifest);
    doc.comment(&format!("R0={} AN={}", sig9(r0), an_label(use_an)));
    doc.row(&["eps", "J", "Rs_lower"]);
    for r in &rows {
        doc.row(&[sig9(r.eps), r.eavesdroppers.len().to_string(), sig9(r.rs_lower)]);
    }
    emit(Some(&dir.join("fig3.csv")), doc.as_str())?;

    // rows are ε-major: row i·|sets| + j
    let at = |i: usize, j: usize| &rows[i * sets.len() + j];
    let mut summaries = Vec::new();
    for (j, set) in sets.iter().enumerate() {
        let rs: Vec<f64> = (0..eps.len()).map(|i| at(i, j).rs_lower).collect();
        let zero = eps.iter().position(|&e| e == 0.0);
        let (perfect_t_max, robust_r_max_at_zero, reduction_ok) = match zero {
            Some(i) => {
                let (ch, _) = ctx.scenario.subset(set);
                let inst = PerfectInstance::new(&ch, &ctx.scenario.power, &ctx.mi, r0, use_an)?;
                let t = solve_rate(&inst, &ctx.mi, &ctx.settings)?.t_max;
                let r = at(i, j).r_max;
                let ok = (r - t).abs() <= tol * inst.bounds.c;
                (Some(t), Some(r), Some(ok))
            }
            None => (None, None, None),
        };
        summaries.push(Fig3SetSummary {
            label: set_label(set),
            eavesdroppers: set.clone(),
            non_increasing_in_eps: rs.windows(2).all(|w| w[1] <= w[0] + tol),
            rs_lower: rs,
            perfect_t_max,
            robust_r_max_at_zero,
            reduction_ok,
        });
    }
    let non_increasing_in_j = (0..eps.len())
        .map(|i| (1..sets.len()).all(|j| at(i, j).rs_lower <= at(i, j - 1).rs_lower + tol))
        .collect();
    let summary = Fig3Summary {
        r0,
        an: use_an,
        eps: eps.clone(),
        sets: summaries,
        non_increasing_in_j,
        tolerance: tol,
    };
    emit(
        Some(&dir.join("fig3_summary.json")),
        &json_with_manifest(&ctx.manifest, &summary)?,
    )?;
    failed_points(rows.iter().filter(|r| r.status == SOLVER_FAILURE).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(set_label(&[0, 1, 2]), "J3");
        assert_eq!(set_label(&[1, 2]), "E1-2");
    }

    #[test]
    fn sorting_grid() {
        assert_eq!(sorted_grid(&[0.02, 0.0, 0.01]), vec![0.0, 0.01, 0.02]);
    }
}
