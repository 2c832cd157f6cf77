//! Link gains, power budgets, CSI uncertainty, and the scalar SNR bounds
//! derived from the direct links.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Complex gains of every link.
///
/// `g` is the source-to-relay column vector, `h` and each `z[j]` are row
/// vectors out of the relay, `h0` and `z0[j]` are the direct links from the
/// source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub g: Vec<Complex64>,
    pub h0: Complex64,
    pub h: Vec<Complex64>,
    pub z0: Vec<Complex64>,
    pub z: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.g.len()
    }

    pub fn eavesdroppers(&self) -> usize {
        self.z0.len()
    }

    /// Every problem with the channel set, not just the first one.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.g.len();
        if n == 0 {
            out.push("g: relay must have at least one antenna".into());
        }
        if self.h.len() != n {
            out.push(format!("h: length {} does not match N={n}", self.h.len()));
        }
        if self.z.len() != self.z0.len() {
            out.push(format!(
                "z: {} relay-eavesdropper vectors but {} direct links z0",
                self.z.len(),
                self.z0.len()
            ));
        }
        for (j, zj) in self.z.iter().enumerate() {
            if zj.len() != n {
                out.push(format!("z[{j}]: length {} does not match N={n}", zj.len()));
            }
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !self.g.iter().all(finite) {
            out.push("g: non-finite entry".into());
        }
        if !finite(&self.h0) {
            out.push("h0: non-finite".into());
        }
        if !self.h.iter().all(finite) {
            out.push("h: non-finite entry".into());
        }
        if !self.z0.iter().all(finite) {
            out.push("z0: non-finite entry".into());
        }
        for (j, zj) in self.z.iter().enumerate() {
            if !zj.iter().all(finite) {
                out.push(format!("z[{j}]: non-finite entry"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// The channel restricted to eavesdroppers `idx`, in that order.
    pub fn with_eavesdroppers(&self, idx: &[usize]) -> Self {
        Self {
            g: self.g.clone(),
            h0: self.h0,
            h: self.h.clone(),
            z0: idx.iter().map(|&j| self.z0[j]).collect(),
            z: idx.iter().map(|&j| self.z[j].clone()).collect(),
        }
    }
}

/// Source power, budgets and noise, all linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub ps: f64,
    pub ps_max: f64,
    pub pr_max: f64,
    pub n0: f64,
}

impl PowerConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.ps >= 0.0 && self.ps.is_finite()) {
            out.push(format!("Ps: must be finite and >= 0, got {}", self.ps));
        }
        if !(self.ps_max.is_finite() && self.ps <= self.ps_max * (1.0 + 1e-12)) {
            out.push(format!("Ps_max: Ps={} exceeds budget {}", self.ps, self.ps_max));
        }
        if !(self.pr_max > 0.0 && self.pr_max.is_finite()) {
            out.push(format!("Pr_max: must be finite and > 0, got {}", self.pr_max));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            out.push(format!("N0: must be finite and > 0, got {}", self.n0));
        }
        out
    }

    pub fn with_source_power(&self, ps: f64) -> Self {
        Self { ps, ..*self }
    }
}

/// Norm bounds on the CSI errors of each link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRadii {
    pub eps_g: f64,
    pub eps_h0: f64,
    pub eps_h: f64,
    pub eps_z0: Vec<f64>,
    pub eps_z: Vec<f64>,
}

impl UncertaintyRadii {
    pub fn zero(eavesdroppers: usize) -> Self {
        Self::uniform(0.0, eavesdroppers)
    }

    /// Same radius on every link.
    pub fn uniform(eps: f64, eavesdroppers: usize) -> Self {
        Self {
            eps_g: eps,
            eps_h0: eps,
            eps_h: eps,
            eps_z0: vec![eps; eavesdroppers],
            eps_z: vec![eps; eavesdroppers],
        }
    }

    pub fn violations(&self, eavesdroppers: usize) -> Vec<String> {
        let mut out = Vec::new();
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        for (name, x) in [("eps_g", self.eps_g), ("eps_h0", self.eps_h0), ("eps_h", self.eps_h)] {
            if !ok(x) {
                out.push(format!("radii.{name}: must be finite and >= 0, got {x}"));
            }
        }
        if self.eps_z0.len() != eavesdroppers {
            out.push(format!(
                "radii.eps_z0: {} entries for J={eavesdroppers}",
                self.eps_z0.len()
            ));
        }
        if self.eps_z.len() != eavesdroppers {
            out.push(format!(
                "radii.eps_z: {} entries for J={eavesdroppers}",
                self.eps_z.len()
            ));
        }
        for (j, &x) in self.eps_z0.iter().enumerate() {
            if !ok(x) {
                out.push(format!("radii.eps_z0[{j}]: must be finite and >= 0, got {x}"));
            }
        }
        for (j, &x) in self.eps_z.iter().enumerate() {
            if !ok(x) {
                out.push(format!("radii.eps_z[{j}]: must be finite and >= 0, got {x}"));
            }
        }
        out
    }

    pub fn with_eavesdroppers(&self, idx: &[usize]) -> Self {
        Self {
            eps_g: self.eps_g,
            eps_h0: self.eps_h0,
            eps_h: self.eps_h,
            eps_z0: idx.iter().map(|&j| self.eps_z0[j]).collect(),
            eps_z: idx.iter().map(|&j| self.eps_z[j]).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eps_g == 0.0
            && self.eps_h0 == 0.0
            && self.eps_h == 0.0
            && self.eps_z0.iter().all(|&x| x == 0.0)
            && self.eps_z.iter().all(|&x| x == 0.0)
    }
}

/// Direct-link SNR terms.
///
/// `a`: source-destination (worst case under uncertainty), `b[j]`:
/// source-eavesdropper (best case), `c`: source-relay (worst case),
/// `a_max`: best-case source-destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarBounds {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
    pub a_max: f64,
}

pub fn scalar_bounds_perfect(ch: &ChannelSet, pw: &PowerConfig) -> ScalarBounds {
    let k = pw.ps / pw.n0;
    let a = k * ch.h0.norm_sqr();
    ScalarBounds {
        a,
        b: ch.z0.iter().map(|z| k * z.norm_sqr()).collect(),
        c: k * norm_sqr(&ch.g),
        a_max: a,
    }
}

/// Bounds over the uncertainty region: `a` and `c` deflate the estimate's
/// magnitude by the radius (clamped at zero), `b[j]` and `a_max` inflate it.
pub fn scalar_bounds_robust(
    ch: &ChannelSet,
    radii: &UncertaintyRadii,
    pw: &PowerConfig,
) -> ScalarBounds {
    let k = pw.ps / pw.n0;
    let h0 = ch.h0.norm();
    let g = norm_sqr(&ch.g).sqrt();
    let a = if h0 > radii.eps_h0 {
        k * (h0 - radii.eps_h0).powi(2)
    } else {
        0.0
    };
    let c = if g > radii.eps_g {
        k * (g - radii.eps_g).powi(2)
    } else {
        0.0
    };
    ScalarBounds {
        a,
        b: ch
            .z0
            .iter()
            .zip(&radii.eps_z0)
            .map(|(z, e)| k * (z.norm() + e).powi(2))
            .collect(),
        c,
        a_max: k * (h0 + radii.eps_h0).powi(2),
    }
}
