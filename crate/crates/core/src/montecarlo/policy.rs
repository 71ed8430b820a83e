use serde::{Deserialize, Serialize};

use super::McError;
use crate::matlib::Matrix;
use crate::systems::Network;

fn default_saturation() -> f64 {
    4.0
}

fn default_tolerance() -> f64 {
    0.5
}

/// Deadbeat tracking of a list of abstract-state waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPolicy {
    pub waypoints: Vec<Vec<f64>>,
    #[serde(default = "default_saturation")]
    pub saturation: f64,
    /// Sup-norm radius at which the next waypoint becomes active.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

/// Input law `ν̂(x̂, k)` for the abstract network; every component stays in
/// `[−saturation, saturation]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AbstractPolicy {
    Constant { value: Vec<f64>, saturation: f64 },
    Waypoint(WaypointPolicy),
    /// Row `k` is applied at step `k`; the last row is held afterwards.
    LookupTable { table: Vec<Vec<f64>>, saturation: f64 },
}

/// Per-trial mutable state of a policy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolicyState {
    pub active: usize,
}

fn within(values: &[f64], bound: f64) -> Result<(), McError> {
    match values.iter().find(|v| !(v.abs() <= bound)) {
        Some(&value) => Err(McError::PolicySaturationViolated { value, bound }),
        None => Ok(()),
    }
}

pub fn waypoint_policy(waypoints: Vec<Vec<f64>>, saturation: f64, tolerance: f64) -> Result<AbstractPolicy, McError> {
    let p = AbstractPolicy::Waypoint(WaypointPolicy {
        waypoints,
        saturation,
        tolerance,
    });
    p.validate()?;
    Ok(p)
}

impl AbstractPolicy {
    pub fn saturation(&self) -> f64 {
        match self {
            AbstractPolicy::Constant { saturation, .. } | AbstractPolicy::LookupTable { saturation, .. } => {
                *saturation
            }
            AbstractPolicy::Waypoint(w) => w.saturation,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        let sat = self.saturation();
        if !(sat >= 0.0) {
            return Err(McError::InvalidPolicy(format!("saturation {sat} must be non-negative")));
        }
        match self {
            AbstractPolicy::Constant { value, .. } => within(value, sat),
            AbstractPolicy::LookupTable { table, .. } => {
                if table.is_empty() {
                    return Err(McError::InvalidPolicy("lookup table is empty".into()));
                }
                table.iter().try_for_each(|row| within(row, sat))
            }
            AbstractPolicy::Waypoint(w) => {
                if w.waypoints.is_empty() {
                    return Err(McError::EmptyWaypointList);
                }
                if !(w.tolerance >= 0.0) {
                    return Err(McError::InvalidPolicy("tolerance must be non-negative".into()));
                }
                Ok(())
            }
        }
    }

    /// Input at abstract state `xhat` and step `k`.
    pub fn act(
        &self,
        state: &mut PolicyState,
        abst: &Network,
        xhat: &[f64],
        k: usize,
    ) -> Result<Vec<f64>, McError> {
        let m = abst.m();
        let nu = match self {
            AbstractPolicy::Constant { value, .. } => value.clone(),
            AbstractPolicy::LookupTable { table, .. } => table[k.min(table.len() - 1)].clone(),
            AbstractPolicy::Waypoint(w) => w.act(state, abst, xhat)?,
        };
        if nu.len() != m {
            return Err(McError::DimensionMismatch(format!(
                "policy gives {} inputs, abstraction takes {m}",
                nu.len()
            )));
        }
        within(&nu, self.saturation())?;
        Ok(nu)
    }
}

impl WaypointPolicy {
    fn act(&self, state: &mut PolicyState, abst: &Network, xhat: &[f64]) -> Result<Vec<f64>, McError> {
        if self.waypoints.is_empty() {
            return Err(McError::EmptyWaypointList);
        }
        let target = &self.waypoints[state.active];
        if target.len() != xhat.len() {
            return Err(McError::DimensionMismatch(format!(
                "waypoint has {} entries, abstract state has {}",
                target.len(),
                xhat.len()
            )));
        }
        let reached = target
            .iter()
            .zip(xhat)
            .all(|(c, x)| (c - x).abs() <= self.tolerance);
        if reached && state.active + 1 < self.waypoints.len() {
            state.active += 1;
        }
        let target = &self.waypoints[state.active];
        // drift with zero input and noise, then solve B̂ ν̂ = c − drift
        let drift = abst.step(xhat, &vec![0.0; abst.m()], &vec![0.0; abst.noise_dim()])?;
        let b = Matrix::block_diag(abst.subsystems.iter().map(|s| &s.b));
        if !b.is_square() {
            return Err(McError::InvalidPolicy(
                "waypoint tracking needs as many abstract inputs as states".into(),
            ));
        }
        let rhs = Matrix::column(&target.iter().zip(&drift).map(|(c, d)| c - d).collect::<Vec<_>>());
        let nu = b.solve(&rhs)?;
        Ok(nu
            .as_slice()
            .iter()
            .map(|v| v.clamp(-self.saturation, self.saturation))
            .collect())
    }
}
