//! Quadratic storage-function certificates `V(x, x̂) = (x − P x̂)ᵀ M̃ (x − P x̂)`
//! between a concrete subsystem and its abstraction.
//!
//! [`verify_storage`] checks the matrix (in)equalities that make `V` a
//! stochastic storage function, [`derive_params`] turns a verified certificate
//! into its comparison-function coefficients, and [`interface`] refines an
//! abstract input into a concrete one.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matlib::{eq_threshold, sym_eig_bounds, MatError, Matrix};
use crate::systems::{SystemError, SystemModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("the supply-rate matrix is not symmetric (asymmetry {asym:e})")]
    NonSymmetricXbar { asym: f64 },
    #[error("Mtil is not positive definite (smallest eigenvalue {lambda_min:e})")]
    MtilNotPD { lambda_min: f64 },
    #[error("certificate has not passed verification")]
    NotVerified,
    #[error("B^T Mtil B is singular")]
    SingularGram,
    #[error("C1 is zero, so the output lower bound is undefined")]
    DegenerateOutput,
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// All matrices and scalars of a quadratic storage certificate.
///
/// Shapes, with `n, m, q₂` the concrete state, external-input and
/// internal-output sizes and hats for the abstraction: `M̃: n×n`, `P: n×n̂`,
/// `K: m×n`, `Q: m×n̂`, `L₁, L₂: m×1`, `Z: n×g`, `G: g×p`, `Ĝ: g×p̂`,
/// `H: q₂×q̂₂`, `R̃: m×m̂`, and the supply-rate blocks `X̄¹¹: g×g`,
/// `X̄¹²: g×q₂`, `X̄²¹: q₂×g`, `X̄²²: q₂×q₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageCertificate {
    #[serde(rename = "Mtil")]
    pub mtil: Matrix,
    #[serde(rename = "K")]
    pub k: Matrix,
    #[serde(rename = "Q")]
    pub q: Matrix,
    #[serde(rename = "L1")]
    pub l1: Matrix,
    #[serde(rename = "L2")]
    pub l2: Matrix,
    #[serde(rename = "Z")]
    pub z: Matrix,
    #[serde(rename = "G")]
    pub g: Matrix,
    #[serde(rename = "Ghat")]
    pub ghat: Matrix,
    #[serde(rename = "H")]
    pub h: Matrix,
    #[serde(rename = "P")]
    pub p: Matrix,
    #[serde(rename = "Rtil")]
    pub rtil: Matrix,
    #[serde(rename = "Xbar11")]
    pub xbar11: Matrix,
    #[serde(rename = "Xbar12")]
    pub xbar12: Matrix,
    #[serde(rename = "Xbar21")]
    pub xbar21: Matrix,
    #[serde(rename = "Xbar22")]
    pub xbar22: Matrix,
    pub kappa_hat: f64,
    pub k_til: f64,
}

impl StorageCertificate {
    /// The full supply-rate matrix `X̄ = [X̄¹¹ X̄¹²; X̄²¹ X̄²²]`.
    pub fn xbar(&self) -> Matrix {
        Matrix::from_blocks(&[
            vec![&self.xbar11, &self.xbar12],
            vec![&self.xbar21, &self.xbar22],
        ])
        .expect("blocks checked at verification")
    }

    /// `B R̃ − P B̂`.
    pub fn input_mismatch(&self, conc: &SystemModel, abst: &SystemModel) -> Matrix {
        &(&conc.b * &self.rtil) - &(&self.p * &abst.b)
    }
}

/// Coefficients of `α(s) = alpha_coeff·s²`, `κ(s) = kappa_lin·s`,
/// `ρ_ext(s) = rho_coeff·s²` and the constant `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsfParams {
    pub alpha_coeff: f64,
    pub kappa_lin: f64,
    pub rho_coeff: f64,
    pub psi: f64,
}

impl SsfParams {
    pub fn is_valid(&self) -> bool {
        self.alpha_coeff > 0.0
            && self.alpha_coeff.is_finite()
            && self.kappa_lin > 0.0
            && self.kappa_lin < 1.0
            && self.rho_coeff >= 0.0
            && self.psi >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
}

impl ConditionRecord {
    pub fn passed(&self) -> bool {
        self.residual <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    pub conditions: Vec<ConditionRecord>,
}

impl CheckReport {
    fn from_records(conditions: Vec<ConditionRecord>) -> Self {
        Self {
            passed: conditions.iter().all(ConditionRecord::passed),
            conditions,
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &ConditionRecord> {
        self.conditions.iter().filter(|c| !c.passed())
    }

    pub fn get(&self, name: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<34} {:>20} {:>20}  status", "condition", "residual", "threshold")?;
        for c in &self.conditions {
            writeln!(
                f,
                "{:<34} {:>20.12e} {:>20.12e}  {}",
                c.name,
                c.residual,
                c.threshold,
                if c.passed() { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.passed { "passed" } else { "FAILED" })
    }
}

pub const COND_SCALARS: &str = "scalar ranges";
pub const COND_D_ZG: &str = "D = Z G";
pub const COND_DISSIPATION: &str = "dissipation inequality";
pub const COND_AP: &str = "A P = P Ahat - B Q";
pub const COND_C1P: &str = "C1 P = C1hat";
pub const COND_X12: &str = "X12 C2 P = X12 H C2hat";
pub const COND_X22: &str = "X22 C2 P = X22 H C2hat";
pub const COND_FP: &str = "F P = Fhat";
pub const COND_E: &str = "E = P Ehat - B (L1 - L2)";
pub const COND_PD: &str = "P Dhat = Z Ghat";

fn shape_is(name: &str, m: &Matrix, rows: usize, cols: usize) -> Result<(), CertError> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(CertError::DimensionMismatch(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )))
    }
}

fn check_dims(
    conc: &SystemModel,
    abst: &SystemModel,
    c: &StorageCertificate,
) -> Result<(), CertError> {
    let (n, m, p, q2) = (conc.n(), conc.m(), conc.p(), conc.q2());
    let (nh, mh, ph, q2h) = (abst.n(), abst.m(), abst.p(), abst.q2());
    if conc.q1() != abst.q1() {
        return Err(CertError::DimensionMismatch(format!(
            "external outputs differ: {} vs {}",
            conc.q1(),
            abst.q1()
        )));
    }
    let g = c.g.rows();
    shape_is("Mtil", &c.mtil, n, n)?;
    shape_is("P", &c.p, n, nh)?;
    shape_is("K", &c.k, m, n)?;
    shape_is("Q", &c.q, m, nh)?;
    shape_is("L1", &c.l1, m, 1)?;
    shape_is("L2", &c.l2, m, 1)?;
    shape_is("Z", &c.z, n, g)?;
    shape_is("G", &c.g, g, p)?;
    shape_is("Ghat", &c.ghat, g, ph)?;
    shape_is("H", &c.h, q2, q2h)?;
    shape_is("Rtil", &c.rtil, m, mh)?;
    shape_is("Xbar11", &c.xbar11, g, g)?;
    shape_is("Xbar12", &c.xbar12, g, q2)?;
    shape_is("Xbar21", &c.xbar21, q2, g)?;
    shape_is("Xbar22", &c.xbar22, q2, q2)?;
    Ok(())
}

fn equality(name: &str, lhs: &Matrix, rhs: &Matrix, tol: f64) -> ConditionRecord {
    ConditionRecord {
        name: name.into(),
        residual: (lhs - rhs).max_abs(),
        threshold: eq_threshold(tol, lhs, rhs),
    }
}

/// Both sides of the dissipation matrix inequality, in the block order
/// `[x − P x̂; G w − Ĝ ŵ; δ F (x − P x̂); ν̂]`. The nonlinearity block is omitted
/// when the model has no nonlinearity.
pub fn dissipation_forms(
    conc: &SystemModel,
    abst: &SystemModel,
    c: &StorageCertificate,
) -> Result<(Matrix, Matrix), CertError> {
    check_dims(conc, abst, c)?;
    let n = conc.n();
    let g = c.g.rows();
    let mh = abst.m();
    let with_phi = !conc.phi.is_zero();

    let abk = &conc.a + &(&conc.b * &c.k);
    let bl1e = &(&conc.b * &c.l1) + &conc.e;
    let w = c.input_mismatch(conc, abst);
    let mut cols: Vec<&Matrix> = vec![&abk, &c.z];
    if with_phi {
        cols.push(&bl1e);
    }
    cols.push(&w);
    let t = Matrix::from_blocks(&[cols])?;
    let lhs = &(&t.transpose() * &c.mtil) * &t;

    let c2 = &conc.c2;
    let r11 = &c.mtil.scale(c.kappa_hat) + &(&(&c2.transpose() * &c.xbar22) * c2);
    let r12 = &c2.transpose() * &c.xbar21;
    let r21 = &c.xbar12 * c2;
    let r22 = c.xbar11.clone();
    let wmw = &(&w.transpose() * &c.mtil) * &w;
    let r44 = wmw.scale(c.k_til);
    let z = Matrix::zeros;
    let rhs = if with_phi {
        let two_over_b = if conc.phi.slope_bound.is_infinite() {
            0.0
        } else {
            2.0 / conc.phi.slope_bound
        };
        let ft = conc.f.transpose();
        Matrix::from_blocks(&[
            vec![&r11, &r12, &(-&ft), &z(n, mh)],
            vec![&r21, &r22, &z(g, 1), &z(g, mh)],
            vec![&(-&conc.f), &z(1, g), &Matrix::scalar(two_over_b), &z(1, mh)],
            vec![&z(mh, n), &z(mh, g), &z(mh, 1), &r44],
        ])?
    } else {
        Matrix::from_blocks(&[
            vec![&r11, &r12, &z(n, mh)],
            vec![&r21, &r22, &z(g, mh)],
            vec![&z(mh, n), &z(mh, g), &r44],
        ])?
    };
    Ok((lhs, rhs))
}

/// Checks every condition of the certificate, each as a named residual
/// against its threshold.
///
/// Equalities use `tol·max(1, ‖lhs‖_max, ‖rhs‖_max)`. The dissipation
/// inequality reports `−λ_min(RHS − LHS)` against `tol`.
pub fn verify_storage(
    conc: &SystemModel,
    abst: &SystemModel,
    c: &StorageCertificate,
    tol: f64,
) -> Result<CheckReport, CertError> {
    check_dims(conc, abst, c)?;

    let xb_asym = (&c.xbar21 - &c.xbar12.transpose())
        .max_abs()
        .max(c.xbar11.asymmetry())
        .max(c.xbar22.asymmetry());
    if xb_asym > tol * 1f64.max(c.xbar().max_abs()) {
        return Err(CertError::NonSymmetricXbar { asym: xb_asym });
    }
    let mb = sym_eig_bounds(&c.mtil, tol)?;
    if mb.lambda_min <= tol {
        return Err(CertError::MtilNotPD {
            lambda_min: mb.lambda_min,
        });
    }

    let mut rec = Vec::new();
    let scalars_ok = c.kappa_hat > 0.0 && c.kappa_hat < 1.0 && c.k_til > 0.0;
    rec.push(ConditionRecord {
        name: COND_SCALARS.into(),
        residual: if scalars_ok { 0.0 } else { 1.0 },
        threshold: 0.0,
    });
    rec.push(equality(COND_D_ZG, &conc.d, &(&c.z * &c.g), tol));

    let (lhs, rhs) = dissipation_forms(conc, abst, c)?;
    let gap = &rhs - &lhs;
    let lam = sym_eig_bounds(&gap, tol)?.lambda_min;
    rec.push(ConditionRecord {
        name: COND_DISSIPATION.into(),
        residual: -lam,
        threshold: tol,
    });

    rec.push(equality(
        COND_AP,
        &(&conc.a * &c.p),
        &(&(&c.p * &abst.a) - &(&conc.b * &c.q)),
        tol,
    ));
    rec.push(equality(COND_C1P, &(&conc.c1 * &c.p), &abst.c1, tol));
    let c2p = &conc.c2 * &c.p;
    let hc2 = &c.h * &abst.c2;
    rec.push(equality(COND_X12, &(&c.xbar12 * &c2p), &(&c.xbar12 * &hc2), tol));
    rec.push(equality(COND_X22, &(&c.xbar22 * &c2p), &(&c.xbar22 * &hc2), tol));
    rec.push(equality(COND_FP, &(&conc.f * &c.p), &abst.f, tol));
    rec.push(equality(
        COND_E,
        &conc.e,
        &(&(&c.p * &abst.e) - &(&conc.b * &(&c.l1 - &c.l2))),
        tol,
    ));
    rec.push(equality(COND_PD, &(&c.p * &abst.d), &(&c.z * &c.ghat), tol));
    Ok(CheckReport::from_records(rec))
}

/// `α`, `κ`, `ρ_ext` and `ψ` of a verified certificate.
///
/// `ρ_ext` uses `k̃·λ_max(WᵀM̃W)` with `W = B R̃ − P B̂`, which equals
/// `k̃·‖√M̃ W‖²` without forming the square root.
pub fn derive_params(
    conc: &SystemModel,
    abst: &SystemModel,
    c: &StorageCertificate,
    report: &CheckReport,
) -> Result<SsfParams, CertError> {
    if !report.passed {
        return Err(CertError::NotVerified);
    }
    check_dims(conc, abst, c)?;
    let tol = crate::matlib::DEFAULT_TOL;
    let mb = sym_eig_bounds(&c.mtil, tol)?;
    let cb = sym_eig_bounds(&(&conc.c1.transpose() * &conc.c1), tol)?;
    if cb.lambda_max <= 0.0 {
        return Err(CertError::DegenerateOutput);
    }
    let w = c.input_mismatch(conc, abst);
    let rho = if w.cols() == 0 {
        0.0
    } else {
        let wmw = &(&w.transpose() * &c.mtil) * &w;
        c.k_til * sym_eig_bounds(&wmw, tol)?.lambda_max.max(0.0)
    };
    Ok(SsfParams {
        alpha_coeff: mb.lambda_min / cb.lambda_max,
        kappa_lin: 1.0 - c.kappa_hat,
        rho_coeff: rho,
        psi: noise_trace(conc, abst, c),
    })
}

/// `Tr(RᵀM̃R + R̂ᵀPᵀM̃PR̂)`.
pub fn noise_trace(conc: &SystemModel, abst: &SystemModel, c: &StorageCertificate) -> f64 {
    let r = &conc.r;
    let pr = &c.p * &abst.r;
    (&(&r.transpose() * &c.mtil) * r).trace() + (&(&pr.transpose() * &c.mtil) * &pr).trace()
}

fn len_is(what: &str, v: &[f64], n: usize) -> Result<(), CertError> {
    if v.len() == n {
        Ok(())
    } else {
        Err(CertError::DimensionMismatch(format!(
            "{what} has length {}, expected {n}",
            v.len()
        )))
    }
}

fn error_state(c: &StorageCertificate, x: &[f64], xhat: &[f64]) -> Result<Vec<f64>, CertError> {
    len_is("x", x, c.p.rows())?;
    len_is("xhat", xhat, c.p.cols())?;
    let px = c.p.mul_vec(xhat)?;
    Ok(x.iter().zip(&px).map(|(a, b)| a - b).collect())
}

/// `V(x, x̂) = (x − P x̂)ᵀ M̃ (x − P x̂)`.
pub fn eval_v(c: &StorageCertificate, x: &[f64], xhat: &[f64]) -> Result<f64, CertError> {
    let e = error_state(c, x, xhat)?;
    Ok(c.mtil.quad_form(&e)?)
}

/// `ν = K(x − P x̂) + Q x̂ + R̃ ν̂ + L₁ φ(F x) − L₂ φ(F P x̂)`.
pub fn interface(
    c: &StorageCertificate,
    conc: &SystemModel,
    x: &[f64],
    xhat: &[f64],
    nuhat: &[f64],
) -> Result<Vec<f64>, CertError> {
    let e = error_state(c, x, xhat)?;
    len_is("nuhat", nuhat, c.rtil.cols())?;
    let phi_x = conc.phi_at(x)?;
    let px = c.p.mul_vec(xhat)?;
    let phi_px = conc.phi_at(&px)?;
    let ke = c.k.mul_vec(&e)?;
    let qx = c.q.mul_vec(xhat)?;
    let rn = c.rtil.mul_vec(nuhat)?;
    Ok((0..ke.len())
        .map(|i| ke[i] + qx[i] + rn[i] + c.l1[(i, 0)] * phi_x - c.l2[(i, 0)] * phi_px)
        .collect())
}

/// The `ρ_ext`-minimising `R̃ = (BᵀM̃B)⁻¹ BᵀM̃ P B̂`.
pub fn optimal_rtil(
    c: &StorageCertificate,
    conc: &SystemModel,
    abst: &SystemModel,
) -> Result<Matrix, CertError> {
    let btm = &conc.b.transpose() * &c.mtil;
    let gram = &btm * &conc.b;
    let rhs = &(&btm * &c.p) * &abst.b;
    gram.solve(&rhs).map_err(|e| match e {
        MatError::Singular => CertError::SingularGram,
        other => other.into(),
    })
}

/// `ρ_ext` coefficient for a given `R̃`, holding everything else fixed.
pub fn rho_coeff_for(
    c: &StorageCertificate,
    conc: &SystemModel,
    abst: &SystemModel,
    rtil: &Matrix,
) -> Result<f64, CertError> {
    let w = &(&conc.b * rtil) - &(&c.p * &abst.b);
    let wmw = &(&w.transpose() * &c.mtil) * &w;
    Ok(c.k_til * sym_eig_bounds(&wmw, crate::matlib::DEFAULT_TOL)?.lambda_max.max(0.0))
}

/// Supply rate `[G w − Ĝ ŵ; C₂ x − H Ĉ₂ x̂]ᵀ X̄ [·]`.
pub fn supply_rate(
    c: &StorageCertificate,
    conc: &SystemModel,
    abst: &SystemModel,
    x: &[f64],
    xhat: &[f64],
    w: &[f64],
    what: &[f64],
) -> Result<f64, CertError> {
    let gw = c.g.mul_vec(w)?;
    let gwh = c.ghat.mul_vec(what)?;
    let c2x = conc.c2.mul_vec(x)?;
    let hc2 = c.h.mul_vec(&abst.c2.mul_vec(xhat)?)?;
    let v: Vec<f64> = gw
        .iter()
        .zip(&gwh)
        .map(|(a, b)| a - b)
        .chain(c2x.iter().zip(&hc2).map(|(a, b)| a - b))
        .collect();
    Ok(c.xbar().quad_form(&v)?)
}

/// Exact `E[V(x⁺, x̂⁺)]` for given `(x, x̂, w, ŵ, ν̂)` under the interface,
/// using `E[ζ] = 0` and `E[ζζᵀ] = I` for both (independent) noises.
#[allow(clippy::too_many_arguments)]
pub fn analytic_next_v(
    c: &StorageCertificate,
    conc: &SystemModel,
    abst: &SystemModel,
    x: &[f64],
    xhat: &[f64],
    w: &[f64],
    what: &[f64],
    nuhat: &[f64],
) -> Result<f64, CertError> {
    let nu = interface(c, conc, x, xhat, nuhat)?;
    let xn = conc.step(x, &nu, w, &vec![0.0; conc.noise_dim()])?;
    let xhn = abst.step(xhat, nuhat, what, &vec![0.0; abst.noise_dim()])?;
    Ok(eval_v(c, &xn, &xhn)? + noise_trace(conc, abst, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casestudy;

    #[test]
    fn case_study_certificate_passes() {
        for ni in [3usize, 74] {
            let (conc, abst, cert) = casestudy::subsystem_triple(ni, casestudy::NOISE_GAIN);
            let rep = verify_storage(&conc, &abst, &cert, 1e-9).unwrap();
            assert!(rep.passed, "{rep}");
            assert_eq!(rep.conditions.len(), 10);
            for c in &rep.conditions {
                assert!(c.residual <= 1e-9, "{}: {}", c.name, c.residual);
            }
        }
    }

    #[test]
    fn zero_kappa_breaks_dissipation() {
        let (conc, abst, mut cert) = casestudy::subsystem_triple(74, casestudy::NOISE_GAIN);
        cert.kappa_hat = 0.0;
        let rep = verify_storage(&conc, &abst, &cert, 1e-9).unwrap();
        assert!(!rep.passed);
        assert!(!rep.get(COND_DISSIPATION).unwrap().passed());
        assert!(rep.get(COND_DISSIPATION).unwrap().residual > 0.2);
    }

    #[test]
    fn case_study_params() {
        let (conc, abst, cert) = casestudy::subsystem_triple(74, casestudy::NOISE_GAIN);
        let rep = verify_storage(&conc, &abst, &cert, 1e-9).unwrap();
        let p = derive_params(&conc, &abst, &cert, &rep).unwrap();
        assert!((p.alpha_coeff - 1.0).abs() < 1e-12);
        assert!((p.kappa_lin - 0.05).abs() < 1e-12);
        assert_eq!(p.rho_coeff, 0.0);
        // oracle: Tr(RᵀR) with R = 0.007·1₇₄
        assert!((p.psi - 74.0 * 0.007f64.powi(2)).abs() < 1e-15);
        assert!((p.psi - 0.003626).abs() < 1e-12);
    }

    #[test]
    fn noiseless_pair_has_zero_psi() {
        let (conc, abst, cert) = casestudy::subsystem_triple(5, 0.0);
        let rep = verify_storage(&conc, &abst, &cert, 1e-9).unwrap();
        assert_eq!(derive_params(&conc, &abst, &cert, &rep).unwrap().psi, 0.0);
    }

    #[test]
    fn derive_requires_verification() {
        let (conc, abst, mut cert) = casestudy::subsystem_triple(3, casestudy::NOISE_GAIN);
        cert.kappa_hat = 0.0;
        let rep = verify_storage(&conc, &abst, &cert, 1e-9).unwrap();
        assert_eq!(
            derive_params(&conc, &abst, &cert, &rep),
            Err(CertError::NotVerified)
        );
    }

    #[test]
    fn structural_errors() {
        let (conc, abst, cert) = casestudy::subsystem_triple(3, casestudy::NOISE_GAIN);
        let mut bad = cert.clone();
        bad.xbar21 = bad.xbar21.scale(2.0);
        assert!(matches!(
            verify_storage(&conc, &abst, &bad, 1e-9),
            Err(CertError::NonSymmetricXbar { .. })
        ));
        let mut bad = cert.clone();
        bad.mtil = Matrix::diag(&[1.0, 0.0, 1.0]);
        assert!(matches!(
            verify_storage(&conc, &abst, &bad, 1e-9),
            Err(CertError::MtilNotPD { .. })
        ));
        let mut bad = cert;
        bad.p = Matrix::filled(4, 1, 1.0);
        assert!(matches!(
            verify_storage(&conc, &abst, &bad, 1e-9),
            Err(CertError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn interface_on_consistent_state() {
        let (conc, abst, cert) = casestudy::subsystem_triple(74, casestudy::NOISE_GAIN);
        let _ = abst;
        let xh = 0.8;
        let x = vec![xh; 74];
        let nu = interface(&cert, &conc, &x, &[xh], &[0.0]).unwrap();
        let want = -0.5 * xh - 0.9 * xh.sin();
        assert!(nu.iter().all(|v| (v - want).abs() < 1e-14));
    }

    #[test]
    fn interface_matches_case_study_display() {
        let (conc, _abst, cert) = casestudy::subsystem_triple(4, casestudy::NOISE_GAIN);
        let x = [0.3, -1.1, 2.0, 0.7];
        let xh = -0.4;
        let nh = 1.7;
        let nu = interface(&cert, &conc, &x, &[xh], &[nh]).unwrap();
        for i in 0..4 {
            let want = (0.5 - 1.0) * (x[i] - xh) - 0.5 * xh + nh - x[0].sin() + 0.1 * xh.sin();
            assert!((nu[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pass_through_interface() {
        let (conc, _abst, mut cert) = casestudy::subsystem_triple(2, 0.0);
        cert.k = Matrix::zeros(2, 2);
        cert.q = Matrix::zeros(2, 1);
        cert.l1 = Matrix::zeros(2, 1);
        cert.l2 = Matrix::zeros(2, 1);
        cert.p = Matrix::zeros(2, 1);
        cert.rtil = Matrix::identity(2).block(0, 0, 2, 1);
        let nu = interface(&cert, &conc, &[4.0, 5.0], &[1.0], &[2.5]).unwrap();
        assert_eq!(nu, vec![2.5, 0.0]);
    }

    #[test]
    fn optimal_rtil_examples() {
        let (conc, abst, cert) = casestudy::subsystem_triple(74, casestudy::NOISE_GAIN);
        let r = optimal_rtil(&cert, &conc, &abst).unwrap();
        assert!((&r - &Matrix::filled(74, 1, 1.0)).max_abs() < 1e-12);
        let mut singular = conc.clone();
        singular.b = Matrix::zeros(74, 74);
        assert_eq!(
            optimal_rtil(&cert, &singular, &abst),
            Err(CertError::SingularGram)
        );
    }

    #[test]
    fn eval_v_examples() {
        let (_, _, cert) = casestudy::subsystem_triple(3, 0.0);
        assert_eq!(eval_v(&cert, &[2.0, 2.0, 2.0], &[2.0]).unwrap(), 0.0);
        let x = [1.0, -2.0, 0.5];
        let want: f64 = x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum();
        assert!((eval_v(&cert, &x, &[0.3]).unwrap() - want).abs() < 1e-14);
        let mut scalar = cert;
        scalar.mtil = Matrix::scalar(2.0);
        scalar.p = Matrix::scalar(1.0);
        assert_eq!(eval_v(&scalar, &[3.0], &[1.0]).unwrap(), 8.0);
    }
}
