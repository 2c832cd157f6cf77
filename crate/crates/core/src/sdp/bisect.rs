//! Bisection over a monotone feasibility predicate.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BisectOutcome<W> {
    /// Largest probed feasible value; the true boundary lies in
    /// `[value, value + tol]`.
    pub value: f64,
    pub witness: W,
    pub probes: usize,
    /// Whether the spot re-probe at `value / 2` (or `lo`) was feasible.
    pub monotone_ok: bool,
}

/// Number of interior probes needed to shrink `[lo, hi]` below `tol`.
pub fn probe_count(lo: f64, hi: f64, tol: f64) -> usize {
    if hi <= lo {
        0
    } else {
        ((hi - lo) / tol).log2().ceil().max(0.0) as usize
    }
}

/// Finds the largest `v ∈ [lo, hi]` (within `tol`) for which `check`
/// returns a witness. `check(lo)` must succeed.
pub fn bisect_max<W>(
    mut check: impl FnMut(f64) -> Option<W>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<BisectOutcome<W>> {
    if !(tol > 0.0) || !(hi >= lo) {
        return Err(Error::Domain(format!("bisect_max: bad interval [{lo}, {hi}] or tol {tol}")));
    }
    let mut witness = check(lo).ok_or_else(|| {
        Error::InfeasibleAtLower(format!("predicate infeasible at lower end {lo}"))
    })?;
    let (mut a, mut b) = (lo, hi);
    let n = probe_count(lo, hi, tol);
    for _ in 0..n {
        let mid = 0.5 * (a + b);
        match check(mid) {
            Some(w) => {
                a = mid;
                witness = w;
            }
            None => b = mid,
        }
    }
    let spot = if a > lo { 0.5 * (lo + a) } else { lo };
    let monotone_ok = check(spot).is_some();
    Ok(BisectOutcome {
        value: a,
        witness,
        probes: n,
        monotone_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_predicate() {
        let out = bisect_max(|v| (v <= 3.7).then_some(v), 0.0, 10.0, 1e-6).unwrap();
        assert!((out.value - 3.7).abs() <= 1e-6);
        assert_eq!(out.probes, 24);
        assert!(out.monotone_ok);
        assert_eq!(out.witness, out.value);
    }

    #[test]
    fn always_true_reaches_hi() {
        let c = 6.1137027;
        let out = bisect_max(|_| Some(()), 0.0, c, 1e-6 * c).unwrap();
        assert!(c - out.value <= 1e-6 * c);
    }

    #[test]
    fn infeasible_lower_end() {
        let err = bisect_max(|_| None::<()>, 0.0, 1.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::InfeasibleAtLower(_)));
    }

    #[test]
    fn non_monotone_flagged() {
        // feasible on [0, 0.1] ∪ [0.45, 0.55]
        let f = |v: f64| (v <= 0.1 || (0.45..=0.55).contains(&v)).then_some(());
        let out = bisect_max(f, 0.0, 1.0, 1e-6).unwrap();
        assert!((out.value - 0.55).abs() <= 1e-6);
        assert!(!out.monotone_ok);
    }
}
