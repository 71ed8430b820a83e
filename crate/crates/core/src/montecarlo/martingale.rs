use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{RngStream, AUX_STREAM};
use super::sim::ClosedLoop;
use super::McError;
use crate::certificates::SsfParams;
use crate::matlib::Matrix;

/// A state pair and abstract input at which the decrease condition is tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub nuhat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub v: f64,
    pub mean_next: f64,
    pub std_err: f64,
    /// `V − κ V + ρ ‖ν̂‖² + ψ`.
    pub bound: f64,
    /// `(bound − mean_next) / std_err`; infinite when the noise vanishes.
    pub margin_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub probes: Vec<ProbeResult>,
    pub min_margin_se: f64,
    /// Every probe has `margin_se ≥ −3`.
    pub holds: bool,
}

/// Random probes: `x̂` uniform in `[−spread, spread]`, `x = P x̂` plus
/// Gaussian offsets of size `offset`, and `ν̂` uniform within `nuhat_sup`.
pub fn random_probes(
    setup: &ClosedLoop,
    count: usize,
    spread: f64,
    offset: f64,
    nuhat_sup: f64,
    seed: u64,
) -> Result<Vec<ProbePoint>, McError> {
    let mut rng = RngStream::with_stream(seed, AUX_STREAM);
    (0..count)
        .map(|_| {
            let xhat: Vec<f64> = (0..setup.abstraction.n())
                .map(|_| rng.uniform_in(-spread, spread))
                .collect();
            let noise = rng.standard_normal(setup.concrete.n());
            let x = setup
                .lift(&xhat)?
                .iter()
                .zip(&noise)
                .map(|(a, z)| a + offset * z)
                .collect();
            let nuhat = (0..setup.abstraction.m())
                .map(|_| rng.uniform_in(-nuhat_sup, nuhat_sup))
                .collect();
            Ok(ProbePoint { x, xhat, nuhat })
        })
        .collect()
}

/// Monte Carlo test of `E[V(x⁺, x̂⁺)] ≤ V − κV + ρ‖ν̂‖² + ψ` under the
/// interface. Both noises enter additively, so each sample of `V⁺` is
/// evaluated as `V_det + 2gᵀs + sᵀHs` with `s` the stacked noise draw and
/// `g`, `H` assembled once per probe. Use at least 10⁴ draws.
pub fn check_supermartingale(
    setup: &ClosedLoop,
    params: &SsfParams,
    probes: &[ProbePoint],
    draws: usize,
    seed: u64,
) -> Result<MartingaleReport, McError> {
    if draws < 2 {
        return Err(McError::InvalidPolicy("need at least two draws".into()));
    }
    let (conc, abst) = (&setup.concrete, &setup.abstraction);
    let (nz, nzh) = (conc.noise_dim(), abst.noise_dim());
    let (xo, ho, zo, zho) = (
        conc.state_offsets(),
        abst.state_offsets(),
        conc.noise_offsets(),
        abst.noise_offsets(),
    );
    let results = probes
        .par_iter()
        .enumerate()
        .map(|(j, pr)| -> Result<ProbeResult, McError> {
            let v = setup.storage(&pr.x, &pr.xhat)?;
            let nu = setup.refine(&pr.x, &pr.xhat, &pr.nuhat)?;
            let xd = conc.step(&pr.x, &nu, &vec![0.0; nz])?;
            let xhd = abst.step(&pr.xhat, &pr.nuhat, &vec![0.0; nzh])?;
            let v_det = setup.storage(&xd, &xhd)?;
            let dim = nz + nzh;
            let mut g = vec![0.0; dim];
            let mut h = Matrix::zeros(dim, dim);
            for (i, c) in setup.certificates.iter().enumerate() {
                let ni = xo[i + 1] - xo[i];
                // e⁺ = e_det + W s, W = [R on ζᵢ, −P R̂ on ζ̂ᵢ]
                let mut w = Matrix::zeros(ni, dim);
                w.set_block(0, zo[i], &conc.subsystems[i].r);
                w.set_block(0, nz + zho[i], &(&c.p * &abst.subsystems[i].r).scale(-1.0));
                let e: Vec<f64> = {
                    let px = c.p.mul_vec(&xhd[ho[i]..ho[i + 1]])?;
                    xd[xo[i]..xo[i + 1]].iter().zip(&px).map(|(a, b)| a - b).collect()
                };
                let wtm = &w.transpose() * &c.mtil;
                let gi = wtm.mul_vec(&e)?;
                for (k, gk) in gi.iter().enumerate() {
                    g[k] += setup.mu[i] * gk;
                }
                h = &h + &(&wtm * &w).scale(setup.mu[i]);
            }
            let mut rng = RngStream::with_stream(seed ^ j as u64, AUX_STREAM);
            let (mut mean_next, mut m2) = (0.0, 0.0);
            for t in 0..draws {
                let s = rng.standard_normal(dim);
                let sample = v_det
                    + 2.0 * g.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>()
                    + h.quad_form(&s)?;
                let d = sample - mean_next;
                mean_next += d / (t + 1) as f64;
                m2 += d * (sample - mean_next);
            }
            let n = draws as f64;
            let var = (m2 / (n - 1.0)).max(0.0);
            let std_err = (var / n).sqrt();
            let nn: f64 = pr.nuhat.iter().map(|u| u * u).sum();
            let bound = v - params.kappa_lin * v + params.rho_coeff * nn + params.psi;
            let gap = bound - mean_next;
            let margin_se = if std_err > 0.0 {
                gap / std_err
            } else if gap >= -1e-9 * bound.abs().max(1.0) {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            Ok(ProbeResult {
                v,
                mean_next,
                std_err,
                bound,
                margin_se,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let min_margin_se = results.iter().map(|r| r.margin_se).fold(f64::INFINITY, f64::min);
    Ok(MartingaleReport {
        holds: min_margin_se >= -3.0,
        min_margin_se,
        probes: results,
    })
}
