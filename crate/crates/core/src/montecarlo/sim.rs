use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::{AbstractPolicy, PolicyState};
use super::rng::{RngStream, ABSTRACT_STREAM, CONCRETE_STREAM};
use super::stats::Estimate;
use super::McError;
use crate::certificates::{eval_v, interface, StorageCertificate};
use crate::speclang::{Dfa, LabeledPartition};
use crate::systems::Network;

/// Concrete network, its abstraction, and the certificates that link each
/// pair of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub concrete: Network,
    pub abstraction: Network,
    pub certificates: Vec<StorageCertificate>,
    /// Weights of the composed `V = Σ μᵢ Vᵢ`.
    pub mu: Vec<f64>,
}

fn mismatch(msg: String) -> McError {
    McError::DimensionMismatch(msg)
}

impl ClosedLoop {
    pub fn new(
        concrete: Network,
        abstraction: Network,
        certificates: Vec<StorageCertificate>,
        mu: Vec<f64>,
    ) -> Result<Self, McError> {
        let n = concrete.len();
        if abstraction.len() != n || certificates.len() != n || mu.len() != n {
            return Err(mismatch(format!(
                "{n} concrete subsystems, {} abstract, {} certificates, {} weights",
                abstraction.len(),
                certificates.len(),
                mu.len()
            )));
        }
        for (i, c) in certificates.iter().enumerate() {
            let (s, a) = (&concrete.subsystems[i], &abstraction.subsystems[i]);
            if c.p.shape() != (s.n(), a.n()) || c.k.rows() != s.m() || c.rtil.cols() != a.m() {
                return Err(mismatch(format!("certificate {i} does not fit its subsystems")));
            }
            if s.q1() != a.q1() {
                return Err(mismatch(format!("subsystem {i} output dimensions differ")));
            }
        }
        Ok(ClosedLoop {
            concrete,
            abstraction,
            certificates,
            mu,
        })
    }

    /// Stacked `x = P x̂` with the blockwise `P`.
    pub fn lift(&self, xhat: &[f64]) -> Result<Vec<f64>, McError> {
        let ho = self.abstraction.state_offsets();
        let mut x = Vec::new();
        for (i, c) in self.certificates.iter().enumerate() {
            x.extend(c.p.mul_vec(&xhat[ho[i]..ho[i + 1]])?);
        }
        Ok(x)
    }

    /// Composed `V(x, x̂) = Σ μᵢ Vᵢ(xᵢ, x̂ᵢ)`.
    pub fn storage(&self, x: &[f64], xhat: &[f64]) -> Result<f64, McError> {
        self.check_states(x, xhat)?;
        let (xo, ho) = (self.concrete.state_offsets(), self.abstraction.state_offsets());
        let mut v = 0.0;
        for (i, c) in self.certificates.iter().enumerate() {
            v += self.mu[i] * eval_v(c, &x[xo[i]..xo[i + 1]], &xhat[ho[i]..ho[i + 1]])?;
        }
        Ok(v)
    }

    /// Concrete input from the blockwise interface functions.
    pub fn refine(&self, x: &[f64], xhat: &[f64], nuhat: &[f64]) -> Result<Vec<f64>, McError> {
        self.check_states(x, xhat)?;
        let (xo, ho, uo) = (
            self.concrete.state_offsets(),
            self.abstraction.state_offsets(),
            self.abstraction.input_offsets(),
        );
        let mut nu = Vec::with_capacity(self.concrete.m());
        for (i, c) in self.certificates.iter().enumerate() {
            nu.extend(interface(
                c,
                &self.concrete.subsystems[i],
                &x[xo[i]..xo[i + 1]],
                &xhat[ho[i]..ho[i + 1]],
                &nuhat[uo[i]..uo[i + 1]],
            )?);
        }
        Ok(nu)
    }

    fn check_states(&self, x: &[f64], xhat: &[f64]) -> Result<(), McError> {
        if x.len() != self.concrete.n() || xhat.len() != self.abstraction.n() {
            return Err(mismatch(format!(
                "states of length {} and {}, expected {} and {}",
                x.len(),
                xhat.len(),
                self.concrete.n(),
                self.abstraction.n()
            )));
        }
        Ok(())
    }

    /// Whether any abstract subsystem has a nonzero noise gain.
    pub fn abstraction_is_noisy(&self) -> bool {
        self.abstraction.subsystems.iter().any(|s| !s.r.is_zero())
    }
}

/// One paired closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTrajectory {
    /// `y(0..=T)`.
    pub y: Vec<Vec<f64>>,
    /// `ŷ(0..=T)`.
    pub yhat: Vec<Vec<f64>>,
    /// `max_k ‖y(k) − ŷ(k)‖`.
    pub sup_error: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Runs the abstraction under `policy` and the concrete network under the
/// refined input, each with its own noise stream.
pub fn simulate_pair(
    setup: &ClosedLoop,
    policy: &AbstractPolicy,
    x0: &[f64],
    xhat0: &[f64],
    horizon: usize,
    concrete_rng: &mut RngStream,
    abstract_rng: &mut RngStream,
) -> Result<PairTrajectory, McError> {
    setup.check_states(x0, xhat0)?;
    let (conc, abst) = (&setup.concrete, &setup.abstraction);
    let noisy_abstraction = setup.abstraction_is_noisy();
    let mut state = PolicyState::default();
    let (mut x, mut xhat) = (x0.to_vec(), xhat0.to_vec());
    let mut y = Vec::with_capacity(horizon + 1);
    let mut yhat = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        y.push(conc.external_outputs(&x)?);
        yhat.push(abst.external_outputs(&xhat)?);
        if k == horizon {
            break;
        }
        let nuhat = policy.act(&mut state, abst, &xhat, k)?;
        let nu = setup.refine(&x, &xhat, &nuhat)?;
        let zeta = concrete_rng.standard_normal(conc.noise_dim());
        let zhat = if noisy_abstraction {
            abstract_rng.standard_normal(abst.noise_dim())
        } else {
            vec![0.0; abst.noise_dim()]
        };
        x = conc.step(&x, &nu, &zeta)?;
        xhat = abst.step(&xhat, &nuhat, &zhat)?;
    }
    let sup_error = y
        .iter()
        .zip(&yhat)
        .map(|(a, b)| distance(a, b))
        .fold(0.0, f64::max);
    Ok(PairTrajectory { y, yhat, sup_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBatch {
    pub horizon: usize,
    pub trials: Vec<PairTrajectory>,
}

/// Runs `cfg.trials` independent pairs in parallel. Trial `i` draws from
/// streams keyed by `seed ⊕ i`, so results do not depend on scheduling.
pub fn run_batch(setup: &ClosedLoop, policy: &AbstractPolicy, cfg: &BatchConfig) -> Result<TrajectoryBatch, McError> {
    if cfg.trials == 0 {
        return Err(McError::EmptyBatch);
    }
    policy.validate()?;
    let trials = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rc = RngStream::for_trial(cfg.seed, i, CONCRETE_STREAM);
            let mut ra = RngStream::for_trial(cfg.seed, i, ABSTRACT_STREAM);
            simulate_pair(setup, policy, &cfg.x0, &cfg.xhat0, cfg.horizon, &mut rc, &mut ra)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrajectoryBatch {
        horizon: cfg.horizon,
        trials,
    })
}

impl TrajectoryBatch {
    fn nonempty(&self) -> Result<(), McError> {
        if self.trials.is_empty() {
            Err(McError::EmptyBatch)
        } else {
            Ok(())
        }
    }

    /// Fraction of trials with `sup_error ≥ ε`, with a 95% interval.
    pub fn estimate_sup_error(&self, epsilon: f64) -> Result<Estimate, McError> {
        self.nonempty()?;
        let hits = self.trials.iter().filter(|t| t.sup_error >= epsilon).count();
        Ok(Estimate::from_counts(hits, self.trials.len(), 0.95))
    }

    /// Empirical `q`-quantile of the sup errors (nearest rank).
    pub fn sup_error_quantile(&self, q: f64) -> Result<f64, McError> {
        self.nonempty()?;
        let mut errs: Vec<f64> = self.trials.iter().map(|t| t.sup_error).collect();
        errs.sort_by(f64::total_cmp);
        let rank = ((q * errs.len() as f64).ceil() as usize).clamp(1, errs.len());
        Ok(errs[rank - 1])
    }

    /// Fraction of trials whose labeled output word has an accepted prefix
    /// of length at most `horizon + 1`.
    pub fn estimate_satisfaction(
        &self,
        dfa: &Dfa,
        labeling: &LabeledPartition,
        horizon: usize,
        view: OutputView,
    ) -> Result<Estimate, McError> {
        self.nonempty()?;
        let mut hits = 0;
        for t in &self.trials {
            let word = match view {
                OutputView::Concrete => labeling.label_trajectory(&t.y),
                OutputView::Abstract => labeling.label_trajectory(&t.yhat),
                OutputView::AbstractDeflated(eps) => labeling.label_trajectory_deflated(&t.yhat, eps),
            };
            if dfa.accepts_within(&word, horizon)? {
                hits += 1;
            }
        }
        Ok(Estimate::from_counts(hits, self.trials.len(), 0.95))
    }

    /// Trials with `sup_error < ε` whose `ε`-deflated abstract word is
    /// accepted by `absorbing` while the concrete word is rejected by `dfa`.
    pub fn refinement_violations(
        &self,
        dfa: &Dfa,
        absorbing: &Dfa,
        labeling: &LabeledPartition,
        epsilon: f64,
        horizon: usize,
    ) -> Result<usize, McError> {
        let mut bad = 0;
        for t in self.trials.iter().filter(|t| t.sup_error < epsilon) {
            let abs_word = labeling.label_trajectory_deflated(&t.yhat, epsilon);
            if absorbing.accepts_within(&abs_word, horizon)?
                && !dfa.accepts_within(&labeling.label_trajectory(&t.y), horizon)?
            {
                bad += 1;
            }
        }
        Ok(bad)
    }

    /// One row per `(trial, k)`: outputs, abstract outputs, and the running
    /// sup of their distance.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), McError> {
        let mut w = csv::Writer::from_writer(out);
        let q = self.trials.first().map_or(0, |t| t.y[0].len());
        let mut header = vec!["trial".to_string(), "k".to_string()];
        header.extend((1..=q).map(|j| format!("y{j}")));
        header.extend((1..=q).map(|j| format!("yhat{j}")));
        header.push("sup_so_far".into());
        w.write_record(&header)?;
        for (i, t) in self.trials.iter().enumerate() {
            let mut sup: f64 = 0.0;
            for k in 0..t.y.len() {
                sup = sup.max(distance(&t.y[k], &t.yhat[k]));
                let mut row = vec![i.to_string(), k.to_string()];
                row.extend(t.y[k].iter().chain(&t.yhat[k]).map(|v| format!("{v:.12e}")));
                row.push(format!("{sup:.12e}"));
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| McError::Io(e.to_string()))?;
        Ok(())
    }
}

/// Which outputs of a trial are labeled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputView {
    Concrete,
    Abstract,
    /// Abstract outputs under the `ε`-deflated labeling.
    AbstractDeflated(f64),
}
