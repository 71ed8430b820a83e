//! Closeness-in-probability bounds between a concrete network and its
//! abstraction, from the parameters of a simulation function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::SsfParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("kappa must lie in (0, 1), got {0}")]
    InvalidKappa(f64),
    #[error("alpha(eps) must be positive, got {0}")]
    NonPositiveAlphaEps(f64),
    #[error("infinite-horizon bound needs rho_ext = 0 and psi = 0 (rho {rho}, psi {psi})")]
    NonzeroPsi { rho: f64, psi: f64 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    /// `V(a, â)` at the initial pair.
    pub v0: f64,
    pub epsilon: f64,
    pub horizon: usize,
    /// `‖ν̂‖_∞`, supplied by the caller.
    pub nuhat_sup: f64,
    pub params: SsfParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    HighThreshold,
    LowThreshold,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityBound {
    /// Clamped to `[0, 1]`.
    pub delta: f64,
    pub raw_delta: f64,
    pub branch: Branch,
    /// `ρ_ext(‖ν̂‖_∞) + ψ`.
    pub psi_hat: f64,
}

/// Upper bound `δ` on `P(sup_{k≤T} ‖y(k) − ŷ(k)‖ ≥ ε)`.
///
/// With `αε = α(ε)`, `κ̂ = kappa_lin` and `ψ̂ = ρ_ext(‖ν̂‖_∞) + ψ`:
///
/// ```text
/// αε ≥ ψ̂/κ̂ :  δ = 1 − (1 − V₀/αε)(1 − ψ̂/αε)^T
/// otherwise :  δ = (V₀/αε)(1 − κ̂)^T + ψ̂/(κ̂ αε)·(1 − (1 − κ̂)^T)
/// ```
pub fn finite_horizon_delta(q: &BoundQuery) -> Result<ProbabilityBound, BoundError> {
    let p = &q.params;
    let finite = [q.v0, q.epsilon, q.nuhat_sup, p.alpha_coeff, p.rho_coeff, p.psi];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(BoundError::InvalidQuery("non-finite input".into()));
    }
    if q.v0 < 0.0 || q.nuhat_sup < 0.0 || p.psi < 0.0 || p.rho_coeff < 0.0 {
        return Err(BoundError::InvalidQuery(
            "V0, nuhat_sup, rho and psi must be non-negative".into(),
        ));
    }
    if !(q.epsilon > 0.0) {
        return Err(BoundError::InvalidQuery("epsilon must be positive".into()));
    }
    let kappa = p.kappa_lin;
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(BoundError::InvalidKappa(kappa));
    }
    let alpha_eps = p.alpha_coeff * q.epsilon * q.epsilon;
    if !(alpha_eps > 0.0) {
        return Err(BoundError::NonPositiveAlphaEps(alpha_eps));
    }
    let psi_hat = p.rho_coeff * q.nuhat_sup * q.nuhat_sup + p.psi;
    let t = q.horizon as i32;
    let r0 = q.v0 / alpha_eps;
    let (raw, branch) = if alpha_eps >= psi_hat / kappa {
        (
            1.0 - (1.0 - r0) * (1.0 - psi_hat / alpha_eps).powi(t),
            Branch::HighThreshold,
        )
    } else {
        let decay = (1.0 - kappa).powi(t);
        (
            r0 * decay + psi_hat / (kappa * alpha_eps) * (1.0 - decay),
            Branch::LowThreshold,
        )
    };
    Ok(ProbabilityBound {
        delta: raw.clamp(0.0, 1.0),
        raw_delta: raw,
        branch,
        psi_hat,
    })
}

/// `min(1, V₀/α(ε))` for a simulation function with `ρ_ext ≡ 0` and `ψ = 0`.
pub fn infinite_horizon_delta(
    v0: f64,
    epsilon: f64,
    params: &SsfParams,
) -> Result<ProbabilityBound, BoundError> {
    if params.rho_coeff != 0.0 || params.psi != 0.0 {
        return Err(BoundError::NonzeroPsi {
            rho: params.rho_coeff,
            psi: params.psi,
        });
    }
    if !(v0 >= 0.0) || !(epsilon > 0.0) {
        return Err(BoundError::InvalidQuery(
            "V0 must be non-negative and epsilon positive".into(),
        ));
    }
    let alpha_eps = params.alpha_coeff * epsilon * epsilon;
    if !(alpha_eps > 0.0) {
        return Err(BoundError::NonPositiveAlphaEps(alpha_eps));
    }
    let raw = v0 / alpha_eps;
    Ok(ProbabilityBound {
        delta: raw.min(1.0),
        raw_delta: raw,
        branch: Branch::Infinite,
        psi_hat: 0.0,
    })
}
