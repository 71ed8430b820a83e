//! Network-level composition of subsystem storage functions.
//!
//! Given weights `μᵢ > 0`, the weighted sum `V = Σ μᵢ Vᵢ` is a simulation
//! function for the interconnection whenever the congruence
//! `[G M; I]ᵀ X̄_cmp [G M; I] ⪯ 0` holds and the abstract coupling satisfies
//! `Ĝ M̂ = G M H`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{SsfParams, StorageCertificate};
use crate::matlib::{eq_threshold, least_squares, sym_eig_bounds, MatError, Matrix, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("composition preconditions not met: {0}")]
    NotVerified(String),
    #[error("quadratic-specialized composition needs a quadratic form for every subsystem")]
    ModeUnavailable,
    #[error("coupling equation has no exact solution (residual {residual:e})")]
    NotEquitable { residual: f64 },
    #[error(transparent)]
    Mat(#[from] MatError),
}

fn check_weights(n: usize, mu: &[f64]) -> Result<(), CompError> {
    if n == 0 || mu.len() != n {
        return Err(CompError::DimensionMismatch(format!(
            "{n} subsystems but {} weights",
            mu.len()
        )));
    }
    if let Some(bad) = mu.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
        return Err(CompError::DimensionMismatch(format!(
            "weights must be positive and finite, got {bad}"
        )));
    }
    Ok(())
}

/// `X̄_cmp`: a 2×2 arrangement of block diagonals `blkdiag(μᵢ X̄ᵢʲᵏ)`.
pub fn build_xcmp(certs: &[&StorageCertificate], mu: &[f64]) -> Result<Matrix, CompError> {
    check_weights(certs.len(), mu)?;
    let scaled = |pick: fn(&StorageCertificate) -> &Matrix| -> Vec<Matrix> {
        certs.iter().zip(mu).map(|(c, m)| pick(c).scale(*m)).collect()
    };
    let x11 = scaled(|c| &c.xbar11);
    let x12 = scaled(|c| &c.xbar12);
    let x21 = scaled(|c| &c.xbar21);
    let x22 = scaled(|c| &c.xbar22);
    let b11 = Matrix::block_diag(&x11);
    let b12 = Matrix::block_diag(&x12);
    let b21 = Matrix::block_diag(&x21);
    let b22 = Matrix::block_diag(&x22);
    Ok(Matrix::from_blocks(&[vec![&b11, &b12], vec![&b21, &b22]])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmiResult {
    pub ok: bool,
    pub lambda_max: f64,
}

/// The `q̃×q̃` form `[G M; I]ᵀ X̄_cmp [G M; I]`, `q̃ = Σ q₂ᵢ`.
pub fn lmi_form(m: &Matrix, certs: &[&StorageCertificate], mu: &[f64]) -> Result<Matrix, CompError> {
    let x = build_xcmp(certs, mu)?;
    let g = Matrix::block_diag(certs.iter().map(|c| &c.g));
    if g.cols() != m.rows() {
        return Err(CompError::DimensionMismatch(format!(
            "coupling has {} rows, subsystems take {} internal inputs",
            m.rows(),
            g.cols()
        )));
    }
    let q = m.cols();
    if x.rows() != g.rows() + q {
        return Err(CompError::DimensionMismatch(format!(
            "coupling has {q} columns, supply rates expect {}",
            x.rows() - g.rows()
        )));
    }
    let gm = &g * m;
    let stacked = Matrix::vstack(&[&gm, &Matrix::identity(q)])?;
    Ok(&(&stacked.transpose() * &x) * &stacked)
}

/// Checks the dissipativity LMI: `λ_max ≤ tol`.
pub fn check_lmi(
    m: &Matrix,
    certs: &[&StorageCertificate],
    mu: &[f64],
    tol: f64,
) -> Result<LmiResult, CompError> {
    let form = lmi_form(m, certs, mu)?;
    let lambda_max = sym_eig_bounds(&form, tol)?.lambda_max;
    Ok(LmiResult {
        ok: lambda_max <= tol,
        lambda_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSolution {
    pub mhat: Matrix,
    /// `‖Ĝ M̂ − G M H‖_F`.
    pub residual: f64,
    pub threshold: f64,
    pub exact: bool,
    pub rank_deficient: bool,
}

impl CouplingSolution {
    pub fn require_exact(&self) -> Result<&Matrix, CompError> {
        if self.exact {
            Ok(&self.mhat)
        } else {
            Err(CompError::NotEquitable {
                residual: self.residual,
            })
        }
    }
}

/// Least-squares solution of `Ĝ M̂ = G M H`; exact iff the residual is within
/// `tol·max(1, ‖G M H‖_max)`.
pub fn solve_abstract_coupling(
    m: &Matrix,
    certs: &[&StorageCertificate],
    tol: f64,
) -> Result<CouplingSolution, CompError> {
    if certs.is_empty() {
        return Err(CompError::DimensionMismatch("no subsystems".into()));
    }
    let g = Matrix::block_diag(certs.iter().map(|c| &c.g));
    let ghat = Matrix::block_diag(certs.iter().map(|c| &c.ghat));
    let h = Matrix::block_diag(certs.iter().map(|c| &c.h));
    if g.cols() != m.rows() || m.cols() != h.rows() {
        return Err(CompError::DimensionMismatch(format!(
            "coupling is {}x{}, expected {}x{}",
            m.rows(),
            m.cols(),
            g.cols(),
            h.rows()
        )));
    }
    let target = &(&g * m) * &h;
    let ls = least_squares(&ghat, &target)?;
    let threshold = eq_threshold(tol, &target, &target);
    Ok(CouplingSolution {
        exact: ls.residual <= threshold,
        residual: ls.residual,
        threshold,
        mhat: ls.x,
        rank_deficient: ls.rank_deficient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    Generic,
    #[default]
    Quadratic,
}

/// The quadratic data of one storage function needed for the specialised α.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPart {
    pub mtil: Matrix,
    pub c1: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposePart {
    pub params: SsfParams,
    pub quadratic: Option<QuadraticPart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedSsf {
    /// Parameters under the selected `mode`.
    pub params: SsfParams,
    pub mu: Vec<f64>,
    pub mode: AlphaMode,
    pub alpha_generic: f64,
    pub alpha_quadratic: Option<f64>,
}

impl ComposedSsf {
    pub fn params_for(&self, mode: AlphaMode) -> Result<SsfParams, CompError> {
        let alpha = match mode {
            AlphaMode::Generic => self.alpha_generic,
            AlphaMode::Quadratic => self.alpha_quadratic.ok_or(CompError::ModeUnavailable)?,
        };
        Ok(SsfParams {
            alpha_coeff: alpha,
            ..self.params
        })
    }
}

/// `α` of `V = Σ μᵢVᵢ` from the block-diagonal quadratic form:
/// `λ_min(blkdiag μᵢM̃ᵢ) / λ_max(blkdiag C₁ᵢᵀC₁ᵢ)`.
pub fn quadratic_alpha(parts: &[&QuadraticPart], mu: &[f64]) -> Result<f64, CompError> {
    check_weights(parts.len(), mu)?;
    let mut lam_m = f64::INFINITY;
    let mut lam_c: f64 = 0.0;
    for (q, m) in parts.iter().zip(mu) {
        lam_m = lam_m.min(m * sym_eig_bounds(&q.mtil, DEFAULT_TOL)?.lambda_min);
        let ctc = &q.c1.transpose() * &q.c1;
        lam_c = lam_c.max(sym_eig_bounds(&ctc, DEFAULT_TOL)?.lambda_max);
    }
    if lam_c <= 0.0 {
        return Err(CompError::DimensionMismatch("stacked C1 is zero".into()));
    }
    Ok(lam_m / lam_c)
}

/// Closed forms for the linear/quadratic family:
/// `κ = minᵢ κᵢ`, `ρ = maxᵢ μᵢρᵢ`, `α = 1/Σᵢ 1/(αᵢμᵢ)`, `ψ = Σᵢ μᵢψᵢ`.
pub fn generic_params(params: &[SsfParams], mu: &[f64]) -> Result<SsfParams, CompError> {
    check_weights(params.len(), mu)?;
    let mut out = SsfParams {
        alpha_coeff: 0.0,
        kappa_lin: f64::INFINITY,
        rho_coeff: 0.0,
        psi: 0.0,
    };
    let mut inv_alpha = 0.0;
    for (p, m) in params.iter().zip(mu) {
        out.kappa_lin = out.kappa_lin.min(p.kappa_lin);
        out.rho_coeff = out.rho_coeff.max(m * p.rho_coeff);
        inv_alpha += 1.0 / (p.alpha_coeff * m);
        out.psi += m * p.psi;
    }
    out.alpha_coeff = 1.0 / inv_alpha;
    Ok(out)
}

/// Composes verified subsystem parameters into network-level parameters.
///
/// Requires a passed LMI and an exact coupling solution. Both α variants are
/// computed when available; `mode` selects the one placed in `params`.
pub fn compose(
    parts: &[ComposePart],
    mu: &[f64],
    mode: AlphaMode,
    lmi: &LmiResult,
    coupling: &CouplingSolution,
) -> Result<ComposedSsf, CompError> {
    check_weights(parts.len(), mu)?;
    if !lmi.ok {
        return Err(CompError::NotVerified(format!(
            "dissipativity LMI fails (lambda_max {:e})",
            lmi.lambda_max
        )));
    }
    if !coupling.exact {
        return Err(CompError::NotVerified(format!(
            "coupling equation residual {:e} exceeds {:e}",
            coupling.residual, coupling.threshold
        )));
    }
    if let Some(i) = parts.iter().position(|p| !p.params.is_valid()) {
        return Err(CompError::NotVerified(format!(
            "subsystem {i} has invalid parameters"
        )));
    }
    let params: Vec<SsfParams> = parts.iter().map(|p| p.params).collect();
    let generic = generic_params(&params, mu)?;
    let quads: Option<Vec<&QuadraticPart>> = parts.iter().map(|p| p.quadratic.as_ref()).collect();
    let alpha_quadratic = quads.map(|q| quadratic_alpha(&q, mu)).transpose()?;
    let mut selected = generic;
    if mode == AlphaMode::Quadratic {
        selected.alpha_coeff = alpha_quadratic.ok_or(CompError::ModeUnavailable)?;
    }
    Ok(ComposedSsf {
        params: selected,
        mu: mu.to_vec(),
        mode,
        alpha_generic: generic.alpha_coeff,
        alpha_quadratic,
    })
}
