//! Compositional reduced-order abstractions of networks of discrete-time
//! stochastic control systems.
//!
//! The crate checks quadratic storage-function certificates between a
//! concrete subsystem and its abstraction, composes them into a network-level
//! simulation function through a dissipativity LMI, turns the result into
//! closeness-in-probability bounds, and carries co-safe temporal
//! specifications across the abstraction. A seeded Monte Carlo engine
//! validates the bounds empirically.

pub mod matlib;
pub mod systems;
pub mod certificates;
pub mod casestudy;
pub mod composition;
pub mod bounds;
pub mod speclang;
pub mod montecarlo;
