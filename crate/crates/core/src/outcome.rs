use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::HermitianMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutcomeStatus {
    #[serde(rename = "ok")]
    Ok,
    /// Some eavesdropper's direct link alone exceeds the allowed SNR.
    #[serde(rename = "eav_direct_link_exceeds_R0")]
    EavDirectLinkExceedsR0,
    /// `c ≤ a`: the relay cannot improve on the direct link.
    #[serde(rename = "direct_link_dominates")]
    DirectLinkDominates,
    #[serde(rename = "robust_infeasible_at_zero")]
    RobustInfeasibleAtZero,
    /// Robust bounds with `c ≤ a_max`.
    #[serde(rename = "relay_link_unusable")]
    RelayLinkUnusable,
}

impl OutcomeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::EavDirectLinkExceedsR0 => "eav_direct_link_exceeds_R0",
            Self::DirectLinkDominates => "direct_link_dominates",
            Self::RobustInfeasibleAtZero => "robust_infeasible_at_zero",
            Self::RelayLinkUnusable => "relay_link_unusable",
        }
    }
}

impl std::fmt::Display for OutcomeStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one rate maximization at a fixed `R0`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    /// `t_max` (perfect CSI) or `r_max` (robust).
    pub t_max: f64,
    pub phi_matrix: HermitianMatrix,
    pub psi: HermitianMatrix,
    pub phi: Vec<Complex64>,
    /// `λ₂/λ₁` of the returned `phi_matrix`.
    pub rank_ratio: f64,
    /// `λ₂/λ₁` of the solver's witness before rank reduction.
    pub raw_rank_ratio: f64,
    pub secrecy_rate: f64,
    pub r0: f64,
    pub power_used: f64,
    pub status: OutcomeStatus,
    /// Largest violation of the feasibility problem at `t_max`, by replay.
    pub max_violation: f64,
    pub probes: usize,
    pub monotone_ok: bool,
}

impl SolveOutcome {
    pub(crate) fn degenerate(n: usize, r0: f64, status: OutcomeStatus) -> Self {
        Self {
            t_max: 0.0,
            phi_matrix: HermitianMatrix::zeros(n),
            psi: HermitianMatrix::zeros(n),
            phi: vec![Complex64::new(0.0, 0.0); n],
            rank_ratio: 0.0,
            raw_rank_ratio: 0.0,
            secrecy_rate: 0.0,
            r0,
            power_used: 0.0,
            status,
            max_violation: 0.0,
            probes: 0,
            monotone_ok: true,
        }
    }
}

/// Principal eigenvector scaled by `√λ₁`, with the first nonzero entry made
/// real and nonnegative, plus `λ₂/λ₁`.
pub fn extract_beamvector(phi: &HermitianMatrix) -> (Vec<Complex64>, f64) {
    let n = phi.dim();
    let eig = phi.eigen();
    let l1 = eig.values.first().copied().unwrap_or(0.0);
    let scale = phi.frobenius_norm();
    if n == 0 || l1 <= 1e-14 * scale.max(1e-300) || l1 <= 0.0 {
        return (vec![Complex64::new(0.0, 0.0); n], 0.0);
    }
    let l2 = eig.values.get(1).copied().unwrap_or(0.0);
    let ratio = (l2 / l1).max(0.0);
    let u = &eig.vectors[0];
    let pivot = u
        .iter()
        .find(|z| z.norm() > 1e-12)
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    let s = l1.sqrt();
    (u.iter().map(|z| z * rot * s).collect(), ratio)
}
