//! Acceptance criteria, one PASS/FAIL line each.

use std::process::ExitCode;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use relaysec::oracle::{beamformer_search, mi_monte_carlo, replay, s_procedure_soundness, OracleConfig};
use relaysec::perfect::{solve_rate, sweep_r0, PerfectInstance, Sweep};
use relaysec::robust::{sweep_eps, RobustInstance, RobustPoint};
use relaysec::{ChannelSet, MiEvaluator, OutcomeStatus, Scenario, UncertaintyRadii};

const GRID_L: usize = 1000;
const FIG3_R0: f64 = 0.0810;
const RANDOM_R0: f64 = 0.25;
const RANDOM_SEED: u64 = 20240601;

struct Criterion {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn prefix(j: usize) -> Vec<usize> {
    (0..j).collect()
}

fn an_tag(an: bool) -> &'static str {
    if an {
        "on"
    } else {
        "off"
    }
}

struct Curve {
    j: usize,
    an: bool,
    sweep: Sweep,
}

fn expected_argmax(j: usize, an: bool) -> f64 {
    match (j, an) {
        (1, _) => 0.001445,
        (_, false) => 0.145797,
        (2, true) => 0.080959,
        _ => 0.099059,
    }
}

fn operating_points(curves: &[Curve]) -> Criterion {
    let mut passed = true;
    let mut parts = Vec::new();
    for c in curves {
        let got = c.sweep.argmax_r0();
        let want = expected_argmax(c.j, c.an);
        let tol = (2.0 * c.sweep.delta).max(0.005);
        let ok = (got - want).abs() <= tol;
        passed &= ok;
        parts.push(format!(
            "J{} AN {}: {got:.6} vs {want:.6} ±{tol:.4}{}",
            c.j,
            an_tag(c.an),
            if ok { "" } else { " MISS" }
        ));
    }
    Criterion {
        id: 1,
        name: "sweep argmax operating points",
        passed,
        detail: parts.join("; "),
    }
}

fn an_overlap(curves: &[Curve]) -> Criterion {
    let on = curves.iter().find(|c| c.j == 1 && c.an).unwrap();
    let off = curves.iter().find(|c| c.j == 1 && !c.an).unwrap();
    let gap = on
        .sweep
        .outcomes
        .iter()
        .zip(&off.sweep.outcomes)
        .map(|(a, b)| (a.secrecy_rate - b.secrecy_rate).abs())
        .fold(0.0, f64::max);
    Criterion {
        id: 2,
        name: "J=1 rate with and without AN overlap",
        passed: gap <= 1e-3,
        detail: format!("max |Rs_on - Rs_off| = {gap:.3e}"),
    }
}

fn saturation(curves: &[Curve], mi: &MiEvaluator) -> Criterion {
    let mut peak = 0.0f64;
    let mut worst_slope = 0.0f64;
    let mut pairs = 0;
    for c in curves {
        let o = &c.sweep.outcomes;
        let half: Vec<f64> = o.iter().map(|p| mi.half_rate(p.t_max).unwrap()).collect();
        peak = half.iter().copied().fold(peak, f64::max);
        for k in (3 * GRID_L / 4)..GRID_L {
            let ok = |i: usize| o[i].status == OutcomeStatus::Ok && half[i] >= 0.499;
            if ok(k) && ok(k + 1) {
                let slope = (o[k + 1].secrecy_rate - o[k].secrecy_rate) / (o[k + 1].r0 - o[k].r0);
                worst_slope = worst_slope.max((slope + 1.0).abs());
                pairs += 1;
            }
        }
    }
    Criterion {
        id: 3,
        name: "rate saturation and unit-slope fall",
        passed: peak <= 0.5 + 1e-6 && pairs > 0 && worst_slope <= 0.05,
        detail: format!("max half-rate {peak:.9}; {pairs} saturated pairs, max |slope + 1| = {worst_slope:.3e}"),
    }
}

fn rank_one(curves: &[Curve], robust: &[(bool, Vec<RobustPoint>)]) -> Criterion {
    let perfect = curves
        .iter()
        .flat_map(|c| &c.sweep.outcomes)
        .filter(|o| o.status == OutcomeStatus::Ok);
    let robust_pts = robust
        .iter()
        .flat_map(|(_, pts)| pts)
        .map(|p| &p.result.outcome)
        .filter(|o| o.status == OutcomeStatus::Ok);
    let (mut n_p, mut n_r, mut worst) = (0, 0, 0.0f64);
    for o in perfect {
        n_p += 1;
        worst = worst.max(o.rank_ratio);
    }
    for o in robust_pts {
        n_r += 1;
        worst = worst.max(o.rank_ratio);
    }
    Criterion {
        id: 4,
        name: "rank-one beamformers",
        passed: worst <= 1e-6,
        detail: format!("max lambda2/lambda1 = {worst:.3e} over {n_p} perfect and {n_r} robust solutions"),
    }
}

fn robust_trends(s: &Scenario, mi: &MiEvaluator, eps: &[f64], robust: &[(bool, Vec<RobustPoint>)]) -> Criterion {
    let tol = 2.0 * s.solver.bisect_tol;
    let sets = s.eavesdroppers();
    let mut passed = true;
    let mut parts = Vec::new();
    for (an, pts) in robust {
        let rate = |e: usize, j: usize| pts[e * sets + j].result.outcome.secrecy_rate;
        let eps_ok = (0..sets).all(|j| (1..eps.len()).all(|e| rate(e, j) <= rate(e - 1, j) + tol));
        let j_ok = (0..eps.len()).all(|e| (1..sets).all(|j| rate(e, j) <= rate(e, j - 1) + tol));
        let mut reduction = 0.0f64;
        for j in 0..sets {
            let (ch, _) = s.subset(&prefix(j + 1));
            let inst = PerfectInstance::new(&ch, &s.power, mi, FIG3_R0, *an).unwrap();
            let p = solve_rate(&inst, mi, &s.solver).unwrap();
            reduction = reduction.max((rate(0, j) - p.secrecy_rate).abs());
        }
        let ok = eps_ok && j_ok && reduction <= tol;
        passed &= ok;
        parts.push(format!(
            "AN {}: non-increasing in eps {eps_ok}, in J {j_ok}, eps=0 gap {reduction:.2e}",
            an_tag(*an)
        ));
    }
    Criterion {
        id: 5,
        name: "robust bound monotone in eps and J, exact at eps=0",
        passed,
        detail: format!("{} (tol {tol:.1e})", parts.join("; ")),
    }
}

fn gaussian_gain(rng: &mut ChaCha8Rng, n: &Normal<f64>) -> Complex64 {
    Complex64::new(n.sample(rng), n.sample(rng))
}

fn random_instance(rng: &mut ChaCha8Rng, n: &Normal<f64>, j: usize) -> ChannelSet {
    let mut draw = |k: usize| (0..k).map(|_| gaussian_gain(rng, n)).collect::<Vec<_>>();
    ChannelSet {
        g: draw(2),
        h0: draw(1)[0],
        h: draw(2),
        z0: draw(j),
        z: (0..j).map(|_| draw(2)).collect(),
    }
}

fn oracle_equivalence(s: &Scenario, mi: &MiEvaluator) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let cfg = OracleConfig::default();
    let (mut solved, mut rejected, mut failures) = (0, 0, Vec::new());
    let (mut worst_gap, mut worst_violation) = (f64::NEG_INFINITY, 0.0f64);
    while solved < 20 {
        let j = 1 + solved % 2;
        let an = solved % 4 < 2;
        let ch = random_instance(&mut rng, &normal, j);
        let inst = PerfectInstance::new(&ch, &s.power, mi, RANDOM_R0, an).unwrap();
        if inst.apriori_infeasible() || inst.bounds.c <= inst.bounds.a {
            rejected += 1;
            continue;
        }
        let out = solve_rate(&inst, mi, &s.solver).unwrap();
        let best = beamformer_search(&inst, &cfg).map_or(0.0, |b| b.t);
        let r = replay(&ch, s.power.ps, s.power.n0, &out.phi, &out.psi);
        let violation = [
            out.t_max - r.destination_snr,
            r.destination_snr - r.relay_snr,
            r.power - s.power.pr_max,
            out.max_violation,
        ]
        .into_iter()
        .chain(r.eavesdropper_snr.iter().map(|e| e - inst.rho_eav_cap))
        .fold(0.0, f64::max);
        let ok = out.t_max >= best - 1e-3 && out.t_max <= best * 1.01 && violation <= 1e-6;
        if !ok {
            failures.push(format!("#{solved} (J={j}, sdp {:.6}, oracle {best:.6}, viol {violation:.1e})", out.t_max));
        }
        worst_gap = worst_gap.max((out.t_max - best).abs() / best.max(1e-12));
        worst_violation = worst_violation.max(violation);
        solved += 1;
    }
    Criterion {
        id: 6,
        name: "SDP matches beamformer search on random instances",
        passed: failures.is_empty(),
        detail: format!(
            "{solved} instances ({rejected} rejected draws), max relative gap {worst_gap:.2e}, max replay violation {worst_violation:.2e}{}",
            if failures.is_empty() { String::new() } else { format!("; failed {}", failures.join(", ")) }
        ),
    }
}

fn soundness(s: &Scenario, mi: &MiEvaluator, robust: &[(bool, Vec<RobustPoint>)]) -> Criterion {
    let cfg = OracleConfig::default();
    let (mut checked, mut worst) = (0, f64::NEG_INFINITY);
    for (an, pts) in robust {
        for p in pts {
            let Some(sol) = &p.result.solution else { continue };
            let ch = s.channel.with_eavesdroppers(&p.eavesdroppers);
            let radii = UncertaintyRadii::uniform(p.eps, p.eavesdroppers.len());
            let inst = RobustInstance::new(&ch, &radii, &s.power, mi, FIG3_R0, *an).unwrap();
            worst = worst.max(s_procedure_soundness(&inst, sol, &cfg).max_violation);
            checked += 1;
        }
    }
    Criterion {
        id: 7,
        name: "robust constraints hold over sampled channel errors",
        passed: checked > 0 && worst <= 1e-6,
        detail: format!(
            "{checked} solutions, {} draws per ball, max violation {worst:.3e}",
            cfg.error_samples
        ),
    }
}

fn mi_suite(mi: &MiEvaluator) -> Criterion {
    let cfg = OracleConfig::default();
    let zero = mi.mutual_information(0.0).unwrap();
    let high = mi.mutual_information(100.0).unwrap();
    let mut worst_z = 0.0f64;
    for rho in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let q = mi.mutual_information(rho).unwrap();
        let (est, se) = mi_monte_carlo(mi.alphabet(), rho, &cfg).unwrap();
        worst_z = worst_z.max((q - est).abs() / se);
    }
    let log_grid: Vec<f64> = (0..100)
        .map(|i| mi.mutual_information(1e-3 * 1e6f64.powf(i as f64 / 99.0)).unwrap())
        .collect();
    let monotone = log_grid.windows(2).all(|w| w[0] <= w[1] + 1e-9);
    let lin_grid: Vec<f64> = (0..=200).map(|i| mi.mutual_information(i as f64 * 0.1).unwrap()).collect();
    let max_second = lin_grid
        .windows(3)
        .map(|w| w[2] - 2.0 * w[1] + w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let passed = zero == 0.0 && (high - 1.0).abs() <= 1e-3 && worst_z <= 3.0 && monotone && max_second <= 1e-7;
    Criterion {
        id: 8,
        name: "BPSK mutual information suite",
        passed,
        detail: format!(
            "I(0) = {zero}, I(100) = {high:.9}, max |z| vs Monte-Carlo {worst_z:.2}, monotone {monotone}, max second difference {max_second:.2e}"
        ),
    }
}

fn main() -> ExitCode {
    let s = Scenario::reference();
    let mi = MiEvaluator::new(s.alphabet.clone(), s.solver.quad_order).unwrap();

    let mut curves = Vec::new();
    for j in 1..=s.eavesdroppers() {
        let (ch, _) = s.subset(&prefix(j));
        for an in [true, false] {
            let sweep = sweep_r0(&ch, &s.power, &mi, GRID_L, an, &s.solver).unwrap();
            curves.push(Curve { j, an, sweep });
        }
    }

    let eps: Vec<f64> = (0..=10).map(|k| k as f64 * 0.005).collect();
    let sets: Vec<Vec<usize>> = (1..=s.eavesdroppers()).map(prefix).collect();
    let robust: Vec<(bool, Vec<RobustPoint>)> = [true, false]
        .into_iter()
        .map(|an| (an, sweep_eps(&s.channel, &s.power, &mi, FIG3_R0, &eps, &sets, an, &s.solver).unwrap()))
        .collect();

    let criteria = [
        operating_points(&curves),
        an_overlap(&curves),
        saturation(&curves, &mi),
        rank_one(&curves, &robust),
        robust_trends(&s, &mi, &eps, &robust),
        oracle_equivalence(&s, &mi),
        soundness(&s, &mi, &robust),
        mi_suite(&mi),
    ];
    for c in &criteria {
        println!(
            "{} criterion {}: {} — {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.detail
        );
    }
    if criteria.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
