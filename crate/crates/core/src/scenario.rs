//! Scenario documents (JSON).
//!
//! Complex numbers are `[re, im]` pairs. Powers are given in dB
//! (`Ps_dB`, `Ps_max_dB`, `Pr_max_dB`) or linearly with the `_linear`
//! suffix. CSI radii are either a per-link `radii` object or a single
//! `eps_all`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, DEFAULT_QUAD_ORDER, MIN_QUAD_ORDER};
use crate::channel::{db_to_linear, ChannelSet, PowerConfig, UncertaintyRadii};
use crate::error::{Error, Result};

const REFERENCE_JSON: &str = include_str!("../scenarios/reference.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Bisection width, relative to the upper end `c` of the search interval.
    pub bisect_tol: f64,
    pub grid_l: usize,
    pub grid_k: usize,
    pub quad_order: usize,
    pub feas_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-6,
            grid_l: 1000,
            grid_k: 1,
            quad_order: DEFAULT_QUAD_ORDER,
            feas_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub alphabet: Alphabet,
    pub channel: ChannelSet,
    pub power: PowerConfig,
    pub radii: UncertaintyRadii,
    pub solver: SolverSettings,
    /// Eavesdropper subsets evaluated by the sweeps; defaults to the
    /// prefixes `{0}, {0,1}, ..`.
    pub eavesdropper_sets: Vec<Vec<usize>>,
}

type Pair = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawAlphabet {
    Name(String),
    Points(Vec<Pair>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadii {
    g: f64,
    h0: f64,
    h: f64,
    z0: Vec<f64>,
    z: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    bisect_tol: Option<f64>,
    #[serde(rename = "grid_L")]
    grid_l: Option<usize>,
    #[serde(rename = "grid_K")]
    grid_k: Option<usize>,
    quad_order: Option<usize>,
    feas_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawScenario {
    name: Option<String>,
    N: usize,
    J: usize,
    #[serde(default)]
    alphabet: Option<RawAlphabet>,
    g: Vec<Pair>,
    h0: Pair,
    h: Vec<Pair>,
    z0: Vec<Pair>,
    z: Vec<Vec<Pair>>,
    Ps_dB: Option<f64>,
    Ps_linear: Option<f64>,
    Ps_max_dB: Option<f64>,
    Ps_max_linear: Option<f64>,
    Pr_max_dB: Option<f64>,
    Pr_max_linear: Option<f64>,
    N0: f64,
    radii: Option<RawRadii>,
    eps_all: Option<f64>,
    eavesdropper_sets: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    solver: RawSolver,
}

fn cplx(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn power_field(
    errors: &mut Vec<String>,
    name: &str,
    db: Option<f64>,
    lin: Option<f64>,
    fallback: Option<f64>,
) -> f64 {
    match (db, lin) {
        (Some(_), Some(_)) => {
            errors.push(format!("{name}: give either {name}_dB or {name}_linear, not both"));
            f64::NAN
        }
        (Some(d), None) => db_to_linear(d),
        (None, Some(l)) => l,
        (None, None) => fallback.unwrap_or_else(|| {
            errors.push(format!("{name}: missing ({name}_dB or {name}_linear)"));
            f64::NAN
        }),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| Error::ScenarioParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_raw(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The two-antenna, three-eavesdropper BPSK scenario bundled with the
    /// crate (Ps = 0 dB, P_R = 9 dB, N0 = 1).
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_JSON).expect("bundled scenario is valid")
    }

    pub fn reference_json() -> &'static str {
        REFERENCE_JSON
    }

    fn from_raw(raw: RawScenario) -> Result<Self> {
        let mut errors = Vec::new();
        let alphabet = match &raw.alphabet {
            None => Some(Alphabet::bpsk()),
            Some(RawAlphabet::Name(n)) => Alphabet::by_name(n)
                .map_err(|e| errors.push(format!("alphabet: {e}")))
                .ok(),
            Some(RawAlphabet::Points(p)) => Alphabet::new("custom", p.iter().map(cplx).collect())
                .map_err(|e| errors.push(format!("alphabet: {e}")))
                .ok(),
        };

        let channel = ChannelSet {
            g: raw.g.iter().map(cplx).collect(),
            h0: cplx(&raw.h0),
            h: raw.h.iter().map(cplx).collect(),
            z0: raw.z0.iter().map(cplx).collect(),
            z: raw.z.iter().map(|v| v.iter().map(cplx).collect()).collect(),
        };
        if raw.N == 0 {
            errors.push("N: must be >= 1".into());
        }
        if raw.J == 0 {
            errors.push("J: at least one eavesdropper is required".into());
        }
        if channel.g.len() != raw.N {
            errors.push(format!("g: length {} does not match N={}", channel.g.len(), raw.N));
        }
        if channel.z0.len() != raw.J {
            errors.push(format!("z0: {} entries for J={}", channel.z0.len(), raw.J));
        }
        errors.extend(channel.violations());

        let ps_max = power_field(&mut errors, "Ps_max", raw.Ps_max_dB, raw.Ps_max_linear, None);
        let ps = power_field(&mut errors, "Ps", raw.Ps_dB, raw.Ps_linear, Some(ps_max));
        let pr_max = power_field(&mut errors, "Pr_max", raw.Pr_max_dB, raw.Pr_max_linear, None);
        let power = PowerConfig {
            ps,
            ps_max,
            pr_max,
            n0: raw.N0,
        };
        if errors.iter().all(|e| !e.starts_with("Ps") && !e.starts_with("Pr")) {
            errors.extend(power.violations());
        }

        let radii = match (raw.radii, raw.eps_all) {
            (Some(_), Some(_)) => {
                errors.push("radii: give either radii or eps_all, not both".into());
                UncertaintyRadii::zero(raw.J)
            }
            (Some(r), None) => UncertaintyRadii {
                eps_g: r.g,
                eps_h0: r.h0,
                eps_h: r.h,
                eps_z0: r.z0,
                eps_z: r.z,
            },
            (None, Some(e)) => UncertaintyRadii::uniform(e, raw.J),
            (None, None) => UncertaintyRadii::zero(raw.J),
        };
        errors.extend(radii.violations(raw.J));

        let defaults = SolverSettings::default();
        let solver = SolverSettings {
            bisect_tol: raw.solver.bisect_tol.unwrap_or(defaults.bisect_tol),
            grid_l: raw.solver.grid_l.unwrap_or(defaults.grid_l),
            grid_k: raw.solver.grid_k.unwrap_or(defaults.grid_k),
            quad_order: raw.solver.quad_order.unwrap_or(defaults.quad_order),
            feas_tol: raw.solver.feas_tol.unwrap_or(defaults.feas_tol),
        };
        if !(solver.bisect_tol > 0.0 && solver.bisect_tol < 1.0) {
            errors.push(format!("solver.bisect_tol: must lie in (0, 1), got {}", solver.bisect_tol));
        }
        if solver.grid_l < 1 {
            errors.push("solver.grid_L: must be >= 1".into());
        }
        if solver.grid_k < 1 {
            errors.push("solver.grid_K: must be >= 1".into());
        }
        if solver.quad_order < MIN_QUAD_ORDER {
            errors.push(format!(
                "solver.quad_order: must be >= {MIN_QUAD_ORDER}, got {}",
                solver.quad_order
            ));
        }
        if !(solver.feas_tol > 0.0 && solver.feas_tol <= 1e-3) {
            errors.push(format!("solver.feas_tol: must lie in (0, 1e-3], got {}", solver.feas_tol));
        }

        let eavesdropper_sets = raw
            .eavesdropper_sets
            .unwrap_or_else(|| (1..=raw.J).map(|k| (0..k).collect()).collect());
        for (k, set) in eavesdropper_sets.iter().enumerate() {
            if set.is_empty() {
                errors.push(format!("eavesdropper_sets[{k}]: empty set"));
            }
            if let Some(&j) = set.iter().find(|&&j| j >= raw.J) {
                errors.push(format!("eavesdropper_sets[{k}]: index {j} out of range for J={}", raw.J));
            }
        }

        match alphabet {
            Some(alphabet) if errors.is_empty() => Ok(Self {
                name: raw.name.unwrap_or_else(|| "scenario".into()),
                alphabet,
                channel,
                power,
                radii,
                solver,
                eavesdropper_sets,
            }),
            _ => Err(Error::InvalidScenario(errors)),
        }
    }

    pub fn eavesdroppers(&self) -> usize {
        self.channel.eavesdroppers()
    }

    /// Restriction to the eavesdroppers in `idx`.
    pub fn subset(&self, idx: &[usize]) -> (ChannelSet, UncertaintyRadii) {
        (
            self.channel.with_eavesdroppers(idx),
            self.radii.with_eavesdroppers(idx),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_loads() {
        let s = Scenario::reference();
        assert_eq!(s.channel.antennas(), 2);
        assert_eq!(s.eavesdroppers(), 3);
        assert_abs_diff_eq!(s.power.ps, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.power.pr_max, 7.943_282_347_242_816, epsilon = 1e-12);
        assert_eq!(s.eavesdropper_sets, vec![vec![0], vec![0, 1], vec![0, 1, 2]]);
        let b = crate::channel::scalar_bounds_perfect(&s.channel, &s.power);
        assert!(b.c > 0.0);
    }

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(Scenario::reference_json()).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn zero_eavesdroppers_rejected() {
        let text = edit(|v| {
            v["J"] = 0.into();
            v["z0"] = serde_json::json!([]);
            v["z"] = serde_json::json!([]);
            v["eavesdropper_sets"] = serde_json::json!([]);
        });
        let err = Scenario::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("at least one eavesdropper"), "{err}");
    }

    #[test]
    fn wrong_vector_length_rejected() {
        let text = edit(|v| {
            v["h"].as_array_mut().unwrap().push(serde_json::json!([1.0, 0.0]));
            v["z"][1].as_array_mut().unwrap().pop();
        });
        match Scenario::from_json(&text).unwrap_err() {
            Error::InvalidScenario(list) => {
                assert!(list.iter().any(|e| e.starts_with("h:")), "{list:?}");
                assert!(list.iter().any(|e| e.starts_with("z[1]")), "{list:?}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn parse_error_has_position() {
        match Scenario::from_json("{\n  \"N\": 2,\n  \"J\": oops\n}").unwrap_err() {
            Error::ScenarioParse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn eps_all_and_linear_units() {
        let text = edit(|v| {
            let o = v.as_object_mut().unwrap();
            o.remove("Pr_max_dB");
            o.insert("Pr_max_linear".into(), 4.0.into());
            o.insert("eps_all".into(), 0.02.into());
        });
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(s.power.pr_max, 4.0);
        assert_eq!(s.radii, UncertaintyRadii::uniform(0.02, 3));
    }

    #[test]
    fn inline_alphabet() {
        let text = edit(|v| v["alphabet"] = serde_json::json!([[0.0, 1.0], [0.0, -1.0]]));
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(s.alphabet.size(), 2);
    }
}
