//! Seeded simulation of concrete/abstract network pairs under refined
//! policies, with empirical estimates of closeness, specification
//! satisfaction and the supermartingale condition.

mod martingale;
mod policy;
mod rng;
mod sim;
mod stats;

pub use martingale::{check_supermartingale, random_probes, MartingaleReport, ProbePoint, ProbeResult};
pub use policy::{waypoint_policy, AbstractPolicy, PolicyState, WaypointPolicy};
pub use rng::{standard_normal, RngStream, ABSTRACT_STREAM, AUX_STREAM, CONCRETE_STREAM};
pub use sim::{run_batch, simulate_pair, BatchConfig, ClosedLoop, OutputView, PairTrajectory, TrajectoryBatch};
pub use stats::{clopper_pearson, Estimate};

use thiserror::Error;

use crate::certificates::CertError;
use crate::matlib::MatError;
use crate::speclang::SpecError;
use crate::systems::SystemError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("policy output {value} exceeds saturation {bound}")]
    PolicySaturationViolated { value: f64, bound: f64 },
    #[error("waypoint list is empty")]
    EmptyWaypointList,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("batch has no trials")]
    EmptyBatch,
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

impl From<csv::Error> for McError {
    fn from(e: csv::Error) -> Self {
        McError::Io(e.to_string())
    }
}
