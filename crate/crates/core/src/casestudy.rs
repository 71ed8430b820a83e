//! Builders for the reference example: three 74-dimensional subsystems on a
//! complete-graph consensus network, each aggregated into one scalar state.
//!
//! Every builder takes the block size so that smaller instances of the same
//! structure can be used in tests.

use crate::certificates::StorageCertificate;
use crate::matlib::Matrix;
use crate::montecarlo::{AbstractPolicy, ClosedLoop, WaypointPolicy};
use crate::speclang::{Aabb, LabeledPartition, Region};
use crate::systems::{complete_graph_laplacian, Network, Nonlinearity, SystemModel};

pub const SUBSYSTEMS: usize = 3;
pub const BLOCK: usize = 74;
pub const NOISE_GAIN: f64 = 0.007;
pub const LAMBDA: f64 = 0.5;
pub const KAPPA_HAT: f64 = 0.95;
pub const EPSILON: f64 = 1.0;
pub const HORIZON: usize = 10;
pub const NUHAT_SUP: f64 = 4.0;
pub const INITIAL_STATE: f64 = -13.0;

/// `τ = 0.9/(n − 1)`, below the inverse maximum degree of the complete graph.
pub fn tau(n: usize) -> f64 {
    0.9 / (n as f64 - 1.0)
}

fn first_unit_row(n: usize) -> Matrix {
    Matrix::from_fn(1, n, |_, j| if j == 0 { 1.0 } else { 0.0 })
}

/// `x⁺ = x + 1·sin(x₁) + ν + w + g·1·ζ`, `y₁ = x₁`, `y₂ = x`.
pub fn concrete_subsystem(n: usize, noise_gain: f64) -> SystemModel {
    SystemModel::new(
        Matrix::identity(n),
        Matrix::identity(n),
        first_unit_row(n),
        Matrix::identity(n),
        Matrix::identity(n),
        Matrix::filled(n, 1, 1.0),
        first_unit_row(n),
        Matrix::filled(n, 1, noise_gain),
        Nonlinearity::sine(),
    )
    .expect("consistent shapes")
}

/// `x̂⁺ = 0.5 x̂ + 0.1 sin(x̂) + ν̂ + ŵ`, noiseless.
pub fn abstract_subsystem() -> SystemModel {
    SystemModel::new(
        Matrix::scalar(0.5),
        Matrix::scalar(1.0),
        Matrix::scalar(1.0),
        Matrix::scalar(1.0),
        Matrix::scalar(1.0),
        Matrix::scalar(0.1),
        Matrix::scalar(1.0),
        Matrix::zeros(1, 1),
        Nonlinearity::sine(),
    )
    .expect("consistent shapes")
}

pub fn certificate(n: usize) -> StorageCertificate {
    let ones = Matrix::filled(n, 1, 1.0);
    let eye = Matrix::identity(n);
    StorageCertificate {
        mtil: eye.clone(),
        k: eye.scale(LAMBDA - 1.0),
        q: ones.scale(-0.5),
        l1: ones.scale(-1.0),
        l2: ones.scale(-0.1),
        z: eye.clone(),
        g: eye.clone(),
        ghat: ones.clone(),
        h: ones.clone(),
        p: ones.clone(),
        rtil: ones,
        xbar11: eye.clone(),
        xbar12: eye.scale(LAMBDA),
        xbar21: eye.scale(LAMBDA),
        xbar22: Matrix::zeros(n, n),
        kappa_hat: KAPPA_HAT,
        k_til: 1.0,
    }
}

pub fn subsystem_triple(n: usize, noise_gain: f64) -> (SystemModel, SystemModel, StorageCertificate) {
    (concrete_subsystem(n, noise_gain), abstract_subsystem(), certificate(n))
}

/// `M = −τ L` over all `count·block` concrete states.
pub fn concrete_coupling(count: usize, block: usize) -> Matrix {
    let n = count * block;
    complete_graph_laplacian(n)
        .expect("at least two states")
        .scale(-tau(n))
}

/// The exact quotient `M̂ = −τ·block·L_count` of the complete-graph coupling.
pub fn abstract_coupling(count: usize, block: usize) -> Matrix {
    let n = count * block;
    complete_graph_laplacian(count)
        .expect("at least two subsystems")
        .scale(-tau(n) * block as f64)
}

pub fn concrete_network(count: usize, block: usize, noise_gain: f64) -> Network {
    Network::new(
        vec![concrete_subsystem(block, noise_gain); count],
        concrete_coupling(count, block),
    )
    .expect("consistent shapes")
}

pub fn abstract_network(count: usize, block: usize) -> Network {
    Network::new(vec![abstract_subsystem(); count], abstract_coupling(count, block))
        .expect("consistent shapes")
}

/// Stay in `S` and out of every `Oᵢ` for `HORIZON + 1` steps, and visit
/// both targets.
pub const SPECIFICATION: &str = "G[0,10] (S & !O1 & !O2 & !O3) & F T1 & F T2";

/// Saturation of every abstract input.
pub const INPUT_BOUND: f64 = 4.0;

/// Robustness margin of the route, used to deflate the abstract labeling.
pub const SPEC_EPSILON: f64 = 0.5;

/// Abstract-state waypoints, one per step, found by a cross-entropy search
/// for a route that keeps a margin above `SPEC_EPSILON` from every region boundary under
/// the saturated abstract dynamics. The route through the corridors is a
/// zigzag: the coupling pulls the three states together faster than the
/// bounded inputs can separate them along a straight leg.
pub const WAYPOINTS: [[f64; 3]; 10] = [
    [-8.07, -7.39, -8.23],
    [-4.38, -6.6, -5.08],
    [-6.58, -6.11, -2.62],
    [1.44, -3.41, -7.49],
    [-6.56, 2.19, 3.1],
    [5.84, 2.51, -2.62],
    [2.29, 2.92, 6.55],
    [6.59, 6.29, 4.82],
    [6.58, 6.7, 7.09],
    [3.74, 7.18, -0.56],
];

fn boxed(bounds: [(f64, f64); 3]) -> Aabb {
    Aabb::new(bounds.iter().map(|b| b.0).collect(), bounds.iter().map(|b| b.1).collect())
        .expect("valid box")
}

fn region(prop: &str, bounds: [(f64, f64); 3]) -> Region {
    Region {
        prop: prop.into(),
        boxes: vec![boxed(bounds)],
    }
}

/// Safe set, obstacles and targets in the three-dimensional output space.
/// `O1` and `O3` are flat in the third coordinate.
pub fn labeling() -> LabeledPartition {
    let s = (-14.0, 14.0);
    let o2 = (-5.0, 5.0);
    let lo = (-10.0, -6.0);
    let hi = (6.0, 10.0);
    let flat = (10.0, 10.0);
    LabeledPartition::new(
        3,
        vec![
            region("S", [s, s, s]),
            region("O1", [lo, hi, flat]),
            region("O2", [o2, o2, o2]),
            region("O3", [hi, lo, flat]),
            region("T1", [lo, lo, lo]),
            region("T2", [hi, hi, hi]),
        ],
    )
    .expect("consistent labeling")
}

pub fn policy() -> AbstractPolicy {
    AbstractPolicy::Waypoint(WaypointPolicy {
        waypoints: WAYPOINTS.iter().map(|w| w.to_vec()).collect(),
        saturation: INPUT_BOUND,
        tolerance: 0.5,
    })
}

/// Concrete network, abstraction with the exact quotient coupling, and
/// unit weights.
pub fn closed_loop(count: usize, block: usize, noise_gain: f64) -> ClosedLoop {
    ClosedLoop::new(
        concrete_network(count, block, noise_gain),
        abstract_network(count, block),
        vec![certificate(block); count],
        vec![1.0; count],
    )
    .expect("consistent closed loop")
}
