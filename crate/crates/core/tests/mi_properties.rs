use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use relaysec::{Alphabet, MiEvaluator};

/// Monte-Carlo estimates (10⁷ draws, seed 12345) with their standard errors.
const MC_FROZEN: [(f64, f64, f64); 5] = [
    (0.5, 0.485588, 2.6e-4),
    (1.0, 0.72165, 2.3e-4),
    (2.0, 0.912662, 1.5e-4),
    (5.0, 0.996749, 3.2e-5),
    (10.0, 0.9999860, 1.9e-6),
];

fn evaluators() -> Vec<MiEvaluator> {
    ["BPSK", "QPSK", "8PSK", "16QAM"]
        .iter()
        .map(|n| MiEvaluator::new(Alphabet::by_name(n).unwrap(), 64).unwrap())
        .collect()
}

#[test]
fn frozen_monte_carlo_agreement() {
    let mi = MiEvaluator::bpsk();
    for (rho, est, se) in MC_FROZEN {
        let q = mi.mutual_information(rho).unwrap();
        assert!((q - est).abs() <= 3.0 * se, "rho={rho}: {q} vs {est} ± {se}");
    }
}

#[test]
fn monotone_on_log_grid() {
    for mi in evaluators() {
        let v: Vec<f64> = (0..100)
            .map(|i| 1e-3 * 1e6f64.powf(i as f64 / 99.0))
            .map(|r| mi.mutual_information(r).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{}", mi.alphabet().name());
    }
}

#[test]
fn concave_on_uniform_grid() {
    for mi in evaluators() {
        let v: Vec<f64> = (0..=200).map(|i| mi.mutual_information(i as f64 * 0.1).unwrap()).collect();
        for w in v.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-7, "{}", mi.alphabet().name());
        }
    }
}

#[test]
fn round_trip_grid() {
    for mi in evaluators() {
        let m = mi.max_bits();
        // inversion of the larger alphabets is costly; a coarser grid suffices
        let pts = if mi.alphabet().size() == 2 { 99 } else { 19 };
        for k in 0..=pts {
            let y = 0.99 * m * k as f64 / pts as f64;
            let rho = mi.inverse_mi(y).unwrap();
            assert_abs_diff_eq!(mi.mutual_information(rho).unwrap(), y, epsilon = 1e-8);
        }
        assert!(mi.inverse_mi(m).unwrap().is_infinite());
    }
}

#[test]
fn half_rate_edges() {
    let mi = MiEvaluator::bpsk();
    assert_eq!(mi.half_rate(0.0).unwrap(), 0.0);
    assert_abs_diff_eq!(mi.half_rate(100.0).unwrap(), 0.5, epsilon = 5e-4);
    assert_abs_diff_eq!(mi.inverse_mi(mi.mutual_information(2.5).unwrap()).unwrap(), 2.5, epsilon = 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounded(rho in 0.0f64..1e3) {
        for mi in evaluators() {
            let v = mi.mutual_information(rho).unwrap();
            prop_assert!(v >= 0.0 && v <= mi.max_bits() + 1e-12);
        }
    }

    #[test]
    fn ordered(a in 0.0f64..200.0, b in 0.0f64..200.0) {
        let mi = MiEvaluator::bpsk();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(mi.mutual_information(lo).unwrap() <= mi.mutual_information(hi).unwrap() + 1e-9);
    }

    #[test]
    fn midpoint_concave(a in 0.0f64..30.0, b in 0.0f64..30.0) {
        let mi = MiEvaluator::bpsk();
        let m = mi.mutual_information(0.5 * (a + b)).unwrap();
        let avg = 0.5 * (mi.mutual_information(a).unwrap() + mi.mutual_information(b).unwrap());
        prop_assert!(m >= avg - 1e-9);
    }

    #[test]
    fn inverse_recovers(frac in 0.0f64..0.99) {
        let mi = MiEvaluator::bpsk();
        let rho = mi.inverse_mi(frac).unwrap();
        prop_assert!((mi.mutual_information(rho).unwrap() - frac).abs() <= 1e-8);
    }
}
