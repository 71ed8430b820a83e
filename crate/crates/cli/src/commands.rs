//! Command implementations shared by the binary and the tests.

use std::fs;
use std::path::Path;

use stochabs::bounds::{finite_horizon_delta, BoundQuery};
use stochabs::certificates::{derive_params, verify_storage, SsfParams, StorageCertificate};
use stochabs::composition::{check_lmi, compose, solve_abstract_coupling, AlphaMode, ComposePart, QuadraticPart};
use stochabs::montecarlo::{
    check_supermartingale, random_probes, run_batch, BatchConfig, ClosedLoop, OutputView, TrajectoryBatch,
};
use stochabs::speclang::{absorb_dfa, compile_scltl, parse_scltl, powerset_alphabet, transfer_probability, Direction, Dfa};
use stochabs::systems::Network;

use crate::config::{Built, ProjectConfig};
use crate::report::*;
use crate::CliError;

/// Bundled configuration of the reference example.
pub const CASESTUDY_CONFIG: &str = include_str!("../configs/casestudy.json");
/// The same structure with three-dimensional subsystems.
pub const CASESTUDY_SMALL_CONFIG: &str = include_str!("../configs/casestudy_small.json");

/// Certificates and their verification outcome.
pub struct Verified {
    pub built: Built,
    pub params: Vec<SsfParams>,
}

pub fn verify(cfg: &ProjectConfig, tol: f64, report: &mut RunReport) -> Result<Option<Verified>, CliError> {
    let built = cfg.build()?;
    report.name = cfg.name.clone();
    let mut params = Vec::new();
    for (i, c) in built.certificates.iter().enumerate() {
        let rep = verify_storage(&built.concrete[i], &built.abstraction[i], c, tol)?;
        let p = if rep.passed {
            Some(derive_params(&built.concrete[i], &built.abstraction[i], c, &rep)?)
        } else {
            None
        };
        params.extend(p);
        report.certificates.push(CertificateEntry {
            index: i,
            report: rep,
            params: p,
        });
    }
    report.evaluate();
    Ok(report.passed.then_some(Verified { built, params }))
}

/// Network-level data after composition.
pub struct Composed {
    pub built: Built,
    pub params: SsfParams,
    pub alpha_generic: f64,
    pub alpha_quadratic: Option<f64>,
    pub abstraction: Network,
}

impl Composed {
    pub fn params_for(&self, mode: AlphaMode) -> Result<SsfParams, CliError> {
        let alpha = match mode {
            AlphaMode::Generic => self.alpha_generic,
            AlphaMode::Quadratic => self.alpha_quadratic.ok_or_else(|| {
                CliError::Failed("quadratic alpha is unavailable".into())
            })?,
        };
        Ok(SsfParams { alpha_coeff: alpha, ..self.params })
    }

    pub fn closed_loop(&self) -> Result<ClosedLoop, CliError> {
        let conc = Network::new(self.built.concrete.clone(), self.built.coupling.clone())?;
        Ok(ClosedLoop::new(
            conc,
            self.abstraction.clone(),
            self.built.certificates.clone(),
            self.built.mu.clone(),
        )?)
    }
}

pub fn compose_stage(
    cfg: &ProjectConfig,
    v: Verified,
    mode: AlphaMode,
    report: &mut RunReport,
) -> Result<Option<Composed>, CliError> {
    let built = v.built;
    let certs: Vec<&StorageCertificate> = built.certificates.iter().collect();
    let lmi = check_lmi(&built.coupling, &certs, &built.mu, cfg.tolerance)?;
    let coupling = solve_abstract_coupling(&built.coupling, &certs, cfg.tolerance)?;
    let parts: Vec<ComposePart> = v
        .params
        .iter()
        .zip(&built.certificates)
        .zip(&built.concrete)
        .map(|((p, c), s)| ComposePart {
            params: *p,
            quadratic: Some(QuadraticPart { mtil: c.mtil.clone(), c1: s.c1.clone() }),
        })
        .collect();
    let composed = if lmi.ok && coupling.exact {
        Some(compose(&parts, &built.mu, mode, &lmi, &coupling)?)
    } else {
        None
    };
    let fallback = SsfParams { alpha_coeff: 0.0, kappa_lin: 0.0, rho_coeff: 0.0, psi: 0.0 };
    report.composition = Some(CompositionReport {
        lmi_lambda_max: lmi.lambda_max,
        lmi_ok: lmi.ok,
        mhat: coupling.mhat.clone(),
        coupling_residual: coupling.residual,
        coupling_exact: coupling.exact,
        mode,
        params: composed.as_ref().map_or(fallback, |c| c.params),
        alpha_generic: composed.as_ref().map_or(0.0, |c| c.alpha_generic),
        alpha_quadratic: composed.as_ref().and_then(|c| c.alpha_quadratic),
    });
    report.evaluate();
    let Some(c) = composed else { return Ok(None) };
    let abstraction = Network::new(built.abstraction.clone(), coupling.mhat)?;
    Ok(Some(Composed {
        built,
        params: c.params,
        alpha_generic: c.alpha_generic,
        alpha_quadratic: c.alpha_quadratic,
        abstraction,
    }))
}

pub fn bound_rows(
    composed: &Composed,
    epsilons: &[f64],
    horizons: &[usize],
    nuhat_sup: f64,
    modes: &[AlphaMode],
) -> Result<Vec<BoundRow>, CliError> {
    let mut rows = Vec::new();
    for &mode in modes {
        let Ok(params) = composed.params_for(mode) else { continue };
        for &t in horizons {
            for &eps in epsilons {
                let b = finite_horizon_delta(&BoundQuery { v0: 0.0, epsilon: eps, horizon: t, nuhat_sup, params })?;
                rows.push(BoundRow {
                    epsilon: eps,
                    horizon: t,
                    nuhat_sup,
                    mode,
                    delta: b.delta,
                    raw_delta: b.raw_delta,
                    branch: b.branch,
                });
            }
        }
    }
    Ok(rows)
}

/// `δ` at the initial pair of the simulation (`V₀ = 0` since `x₀ = P x̂₀`).
pub fn delta_at(composed: &Composed, mode: AlphaMode, eps: f64, horizon: usize, nuhat_sup: f64) -> Result<f64, CliError> {
    let params = composed.params_for(mode)?;
    Ok(finite_horizon_delta(&BoundQuery { v0: 0.0, epsilon: eps, horizon, nuhat_sup, params })?.delta)
}

pub struct Simulated {
    pub batch: TrajectoryBatch,
    pub dfa: Option<Dfa>,
}

pub fn simulate_stage(
    cfg: &ProjectConfig,
    composed: &Composed,
    mode: AlphaMode,
    trials: usize,
    seed: u64,
    report: &mut RunReport,
) -> Result<Simulated, CliError> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::Config("no simulation section".into()))?;
    let policy = cfg.policy.as_ref().ok_or_else(|| CliError::Config("no policy section".into()))?;
    let setup = composed.closed_loop()?;
    let xhat0 = sim.initial_abstract_state.clone();
    let x0 = setup.lift(&xhat0)?;
    let batch = run_batch(
        &setup,
        policy,
        &BatchConfig { trials, horizon: sim.horizon, seed, x0, xhat0 },
    )?;
    let mut rows = Vec::new();
    for &eps in &sim.epsilons {
        let estimate = batch.estimate_sup_error(eps)?;
        let delta = delta_at(composed, mode, eps, sim.horizon, cfg.nuhat_sup)?;
        rows.push(SupErrorRow {
            epsilon: eps,
            estimate,
            delta,
            within_bound: estimate.p <= delta + 2.0 * estimate.half_width(),
        });
    }
    report.simulation = Some(SimulationReport {
        trials,
        seed,
        horizon: sim.horizon,
        sup_error: rows,
        sup_error_q90: batch.sup_error_quantile(0.9)?,
        max_sup_error: batch.sup_error_quantile(1.0)?,
    });
    let mut dfa = None;
    if let Some(spec) = &cfg.spec {
        let f = parse_scltl(&spec.formula)?;
        let mut props = spec.labeling.props();
        props.extend(f.atoms());
        let d = compile_scltl(&f, &powerset_alphabet(&props)?)?;
        let abs = absorb_dfa(&d)?;
        let p_hat = batch.estimate_satisfaction(&abs, &spec.labeling, spec.horizon, OutputView::AbstractDeflated(spec.epsilon))?;
        let p_concrete = batch.estimate_satisfaction(&d, &spec.labeling, spec.horizon, OutputView::Concrete)?;
        let delta = delta_at(composed, mode, spec.epsilon, spec.horizon, cfg.nuhat_sup)?;
        report.spec = Some(SpecReport {
            formula: spec.formula.clone(),
            dfa_locations: d.num_locations(),
            epsilon: spec.epsilon,
            horizon: spec.horizon,
            p_hat,
            delta,
            lower_bound: transfer_probability(p_hat.p, delta, Direction::Lower)?,
            upper_bound: transfer_probability(p_hat.p, delta, Direction::Upper)?,
            p_concrete,
            refinement_violations: batch.refinement_violations(&d, &abs, &spec.labeling, spec.epsilon, spec.horizon)?,
        });
        dfa = Some(d);
    }
    report.evaluate();
    Ok(Simulated { batch, dfa })
}

pub fn supermartingale_stage(
    composed: &Composed,
    probes: usize,
    draws: usize,
    nuhat_sup: f64,
    seed: u64,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let setup = composed.closed_loop()?;
    let points = random_probes(&setup, probes, 14.0, 1.0, nuhat_sup, seed)?;
    let params = composed.params_for(AlphaMode::Generic)?;
    report.supermartingale = Some(check_supermartingale(&setup, &params, &points, draws, seed)?);
    report.evaluate();
    Ok(())
}

pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_batch_csv(dir: &Path, batch: &TrajectoryBatch) -> Result<(), CliError> {
    let mut buf = Vec::new();
    batch.write_csv(&mut buf)?;
    write_file(dir, "trajectories.csv", &buf)
}

/// Verify, compose, bound, simulate and transfer the specification.
pub fn run_pipeline(
    cfg: &ProjectConfig,
    mode: AlphaMode,
    trials: usize,
    seed: u64,
    report: &mut RunReport,
) -> Result<Option<Simulated>, CliError> {
    let Some(v) = verify(cfg, cfg.tolerance, report)? else { return Ok(None) };
    let Some(c) = compose_stage(cfg, v, mode, report)? else { return Ok(None) };
    let horizon = cfg.simulation.as_ref().map_or(10, |s| s.horizon);
    let eps: Vec<f64> = cfg.simulation.as_ref().map_or(vec![1.0], |s| s.epsilons.clone());
    report.bounds = bound_rows(&c, &eps, &[horizon], cfg.nuhat_sup, &[AlphaMode::Quadratic, AlphaMode::Generic])?;
    let sim = simulate_stage(cfg, &c, mode, trials, seed, report)?;
    supermartingale_stage(&c, 20, 100_000, cfg.nuhat_sup, seed, report)?;
    Ok(Some(sim))
}

pub fn casestudy_config(small: bool, zero_noise: bool) -> ProjectConfig {
    let text = if small { CASESTUDY_SMALL_CONFIG } else { CASESTUDY_CONFIG };
    let mut cfg = ProjectConfig::from_json(text).expect("bundled config is valid");
    if zero_noise {
        for g in &mut cfg.subsystems {
            if let crate::config::MatrixSpec::Generated(crate::config::Generator::Filled { value, .. }) = &mut g.concrete.r {
                *value = 0.0;
            }
        }
        cfg.name.push_str(" (noiseless)");
    }
    cfg
}
