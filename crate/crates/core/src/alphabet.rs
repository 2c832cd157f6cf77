//! Finite-alphabet mutual information over the complex AWGN channel.
//!
//! For a unit-power constellation `{a_1, .., a_M}` and SNR `rho`,
//!
//! ```text
//! I(rho) = log2 M - (1/M) sum_l E_n[ log2 sum_m exp(|n|^2 - |n + sqrt(rho)(a_l - a_m)|^2) ]
//! ```
//!
//! with `n ~ CN(0, 1)`. The expectation is taken by a tensor-product
//! Gauss-Hermite rule centered on each transmitted symbol.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::num::NonZeroUsize;
use std::sync::RwLock;

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_QUAD_ORDER: usize = 64;
pub const MIN_QUAD_ORDER: usize = 16;

const MOMENT_TOL: f64 = 1e-12;
const RENORMALIZE_TOL: f64 = 1e-9;

/// A finite complex constellation with zero mean and unit average power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    name: String,
    symbols: Vec<Complex64>,
}

impl Alphabet {
    /// Validates `symbols`. Inputs whose mean and power are within 1e-9 of
    /// compliant are renormalized; anything further off is rejected.
    pub fn new(name: impl Into<String>, symbols: Vec<Complex64>) -> Result<Self> {
        let name = name.into();
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "{name}: need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidAlphabet(format!("{name}: non-finite symbol")));
        }
        for i in 0..symbols.len() {
            for j in (i + 1)..symbols.len() {
                if symbols[i] == symbols[j] {
                    return Err(Error::InvalidAlphabet(format!(
                        "{name}: duplicate symbol {}",
                        symbols[i]
                    )));
                }
            }
        }
        let m = symbols.len() as f64;
        let mean: Complex64 = symbols.iter().sum::<Complex64>() / m;
        let power = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / m;
        if mean.norm() <= MOMENT_TOL && (power - 1.0).abs() <= MOMENT_TOL {
            return Ok(Self { name, symbols });
        }
        if mean.norm() > RENORMALIZE_TOL || (power - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidAlphabet(format!(
                "{name}: mean {mean} and power {power} not within {RENORMALIZE_TOL} of 0 and 1"
            )));
        }
        let centered: Vec<Complex64> = symbols.iter().map(|s| s - mean).collect();
        let p = centered.iter().map(|s| s.norm_sqr()).sum::<f64>() / m;
        let k = 1.0 / p.sqrt();
        Ok(Self {
            name,
            symbols: centered.into_iter().map(|s| s * k).collect(),
        })
    }

    pub fn bpsk() -> Self {
        Self {
            name: "BPSK".into(),
            symbols: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        }
    }

    pub fn qpsk() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            name: "QPSK".into(),
            symbols: vec![
                Complex64::new(r, r),
                Complex64::new(-r, r),
                Complex64::new(-r, -r),
                Complex64::new(r, -r),
            ],
        }
    }

    pub fn psk(m: usize) -> Result<Self> {
        let symbols = (0..m)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
            .collect();
        Self::new(format!("{m}PSK"), symbols)
    }

    /// Square M-QAM with unit average energy.
    pub fn qam(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if side * side != m || side < 2 {
            return Err(Error::InvalidAlphabet(format!("{m}-QAM is not a square constellation")));
        }
        let levels: Vec<f64> = (0..side).map(|k| 2.0 * k as f64 - (side as f64 - 1.0)).collect();
        let energy = 2.0 * levels.iter().map(|x| x * x).sum::<f64>() / side as f64;
        let k = 1.0 / energy.sqrt();
        let symbols = levels
            .iter()
            .flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i * k, q * k)))
            .collect();
        Self::new(format!("{m}QAM"), symbols)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "BPSK" | "2PSK" => Ok(Self::bpsk()),
            "QPSK" | "4PSK" => Ok(Self::qpsk()),
            "8PSK" => Self::psk(8),
            "16QAM" => Self::qam(16),
            "64QAM" => Self::qam(64),
            other => Err(Error::InvalidAlphabet(format!("unknown alphabet name {other:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    /// `log2 M`, the entropy ceiling of `I`.
    pub fn max_bits(&self) -> f64 {
        (self.symbols.len() as f64).log2()
    }
}

/// Quadrature evaluator for `I(rho)` with a memo of exact evaluations.
///
/// The memo is behind an `RwLock`, so one evaluator can be shared across a
/// parallel sweep.
#[derive(Debug)]
pub struct MiEvaluator {
    alphabet: Alphabet,
    order: usize,
    // (x, w) with w already divided by sqrt(pi)
    nodes: Vec<(f64, f64)>,
    cache: RwLock<HashMap<u64, f64>>,
}

impl Clone for MiEvaluator {
    fn clone(&self) -> Self {
        Self {
            alphabet: self.alphabet.clone(),
            order: self.order,
            nodes: self.nodes.clone(),
            cache: RwLock::new(self.cache.read().map(|c| c.clone()).unwrap_or_default()),
        }
    }
}

impl MiEvaluator {
    pub fn new(alphabet: Alphabet, quadrature_order: usize) -> Result<Self> {
        if quadrature_order < MIN_QUAD_ORDER {
            return Err(Error::Domain(format!(
                "quadrature order {quadrature_order} below minimum {MIN_QUAD_ORDER}"
            )));
        }
        let rule = GaussHermite::new(NonZeroUsize::new(quadrature_order).expect("nonzero order"));
        let norm = PI.sqrt();
        let nodes = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (x, w / norm))
            .collect();
        Ok(Self {
            alphabet,
            order: quadrature_order,
            nodes,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn bpsk() -> Self {
        Self::new(Alphabet::bpsk(), DEFAULT_QUAD_ORDER).expect("default order is valid")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn quadrature_order(&self) -> usize {
        self.order
    }

    pub fn max_bits(&self) -> f64 {
        self.alphabet.max_bits()
    }

    /// `I(rho)` in bits per symbol.
    pub fn mutual_information(&self, rho: f64) -> Result<f64> {
        if rho.is_nan() || rho < 0.0 {
            return Err(Error::Domain(format!("SNR must be nonnegative, got {rho}")));
        }
        if rho == 0.0 {
            return Ok(0.0);
        }
        if rho.is_infinite() {
            return Ok(self.max_bits());
        }
        let key = rho.to_bits();
        if let Some(v) = self.cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(v);
        }
        let v = self.evaluate(rho);
        if !v.is_finite() {
            return Err(Error::NonFiniteMi {
                rho,
                order: self.order,
            });
        }
        let v = v.clamp(0.0, self.max_bits());
        if let Ok(mut c) = self.cache.write() {
            c.insert(key, v);
        }
        Ok(v)
    }

    fn evaluate(&self, rho: f64) -> f64 {
        let s = rho.sqrt();
        let syms = self.alphabet.symbols();
        let m = syms.len();
        let mut exps = vec![0.0; m];
        let mut total = 0.0;
        for al in syms {
            let diffs: Vec<Complex64> = syms.iter().map(|am| (al - am) * s).collect();
            let mut acc = 0.0;
            for &(x, wx) in &self.nodes {
                for &(y, wy) in &self.nodes {
                    let n = Complex64::new(x, y);
                    let n2 = n.norm_sqr();
                    let mut mx = f64::NEG_INFINITY;
                    for (e, d) in exps.iter_mut().zip(&diffs) {
                        *e = n2 - (n + d).norm_sqr();
                        mx = mx.max(*e);
                    }
                    let lse = mx + exps.iter().map(|e| (e - mx).exp()).sum::<f64>().ln();
                    acc += wx * wy * lse;
                }
            }
            total += acc;
        }
        self.max_bits() - total / (m as f64 * LN_2)
    }

    /// `I^{-1}(target)`; `+inf` when `target >= log2 M` (the constraint it
    /// feeds is then vacuous).
    pub fn inverse_mi(&self, target: f64) -> Result<f64> {
        if target.is_nan() || target < 0.0 {
            return Err(Error::Domain(format!("target rate must be nonnegative, got {target}")));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        if target >= self.max_bits() {
            return Ok(f64::INFINITY);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.mutual_information(hi)? < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                // Quadrature saturates to log2 M before the true curve does.
                return Ok(f64::INFINITY);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.mutual_information(mid)?;
            if (v - target).abs() <= 1e-12 {
                return Ok(mid);
            }
            if v < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `I(rho)/2`: per-hop rate of the two-hop scheme.
    pub fn half_rate(&self, rho: f64) -> Result<f64> {
        Ok(0.5 * self.mutual_information(rho)?)
    }

    /// Samples `I` on `grid` into a monotone interpolant.
    pub fn table(&self, grid: &[f64]) -> Result<MonotoneTable> {
        let values = grid
            .iter()
            .map(|&r| self.mutual_information(r))
            .collect::<Result<Vec<_>>>()?;
        MonotoneTable::new(grid.to_vec(), values)
    }
}

/// Piecewise-cubic Hermite interpolant with Fritsch-Carlson slope limiting,
/// so monotone data stays monotone between knots.
#[derive(Debug, Clone)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(xs: Vec<f64>, mut ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Domain("table needs at least two matching knots".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("table knots must be strictly increasing".into()));
        }
        // clamp tiny quadrature wiggles so the data itself is monotone
        for i in 1..ys.len() {
            if ys[i] < ys[i - 1] {
                ys[i] = ys[i - 1];
            }
        }
        let n = xs.len();
        let d: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= 0.0 {
                0.0
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / d[i - 1] + w2 / d[i])
            };
        }
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
            } else {
                let a = m[i] / d[i];
                let b = m[i + 1] / d[i];
                let r = a * a + b * b;
                if r > 9.0 {
                    let t = 3.0 / r.sqrt();
                    m[i] = t * a * d[i];
                    m[i + 1] = t * b * d[i];
                }
            }
        }
        Ok(Self { xs, ys, slopes: m })
    }

    /// Value at `x`, clamped to the end knots outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_snr_is_zero_information() {
        let ev = MiEvaluator::bpsk();
        assert_eq!(ev.mutual_information(0.0).unwrap(), 0.0);
        assert_eq!(ev.half_rate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn bpsk_saturates() {
        let ev = MiEvaluator::bpsk();
        assert_abs_diff_eq!(ev.mutual_information(100.0).unwrap(), 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(ev.half_rate(100.0).unwrap(), 0.5, epsilon = 5e-4);
    }

    #[test]
    fn negative_inputs_rejected() {
        let ev = MiEvaluator::bpsk();
        assert!(matches!(ev.mutual_information(-1.0), Err(Error::Domain(_))));
        assert!(matches!(ev.inverse_mi(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn low_order_rejected() {
        assert!(MiEvaluator::new(Alphabet::bpsk(), 8).is_err());
    }

    #[test]
    fn inverse_edges() {
        let ev = MiEvaluator::bpsk();
        assert_eq!(ev.inverse_mi(0.0).unwrap(), 0.0);
        assert!(ev.inverse_mi(1.0).unwrap().is_infinite());
        assert!(ev.inverse_mi(3.0).unwrap().is_infinite());
    }

    #[test]
    fn inverse_round_trip() {
        let ev = MiEvaluator::bpsk();
        let y = ev.mutual_information(2.5).unwrap();
        assert_abs_diff_eq!(ev.inverse_mi(y).unwrap(), 2.5, epsilon = 1e-6);
    }

    #[test]
    fn alphabet_validation() {
        assert!(Alphabet::new("one", vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(Alphabet::new(
            "dup",
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]
        )
        .is_err());
        // off by far more than the renormalization band
        assert!(Alphabet::new(
            "biased",
            vec![Complex64::new(1.1, 0.0), Complex64::new(-0.9, 0.0)]
        )
        .is_err());
        // within the band: renormalized
        let a = Alphabet::new(
            "nearly",
            vec![Complex64::new(1.0 + 1e-10, 0.0), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let mean: Complex64 = a.symbols().iter().sum();
        assert!(mean.norm() < 1e-14);
    }

    #[test]
    fn named_alphabets_are_normalized() {
        for name in ["BPSK", "QPSK", "8PSK", "16QAM", "64QAM"] {
            let a = Alphabet::by_name(name).unwrap();
            let p = a.symbols().iter().map(|s| s.norm_sqr()).sum::<f64>() / a.size() as f64;
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        }
        assert!(Alphabet::by_name("nope").is_err());
    }

    #[test]
    fn qpsk_is_two_bpsk_at_half_snr() {
        // QPSK splits power over two independent BPSK rails
        let q = MiEvaluator::new(Alphabet::qpsk(), 64).unwrap();
        let b = MiEvaluator::bpsk();
        for rho in [0.3, 1.0, 4.0] {
            let iq = q.mutual_information(rho).unwrap();
            let ib = b.mutual_information(rho / 2.0).unwrap();
            assert_abs_diff_eq!(iq, 2.0 * ib, epsilon = 1e-6);
        }
    }

    #[test]
    fn monotone_table_interpolates() {
        let ev = MiEvaluator::bpsk();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let t = ev.table(&grid).unwrap();
        let exact = ev.mutual_information(1.1).unwrap();
        assert_abs_diff_eq!(t.eval(1.1), exact, epsilon = 1e-4);
        let mut prev = -1.0;
        for k in 0..1000 {
            let v = t.eval(k as f64 * 0.01);
            assert!(v >= prev);
            prev = v;
        }
    }
}
