//! Intrinsic-stability analysis for discrete-time dynamical networks.
//!
//! A network `x ↦ F(x)` on `ℝⁿ` (with the max metric) is *intrinsically
//! stable* when it admits a nonnegative Lipschitz matrix `A` with spectral
//! radius `ρ(A) < 1`. Intrinsic stability survives every bounded delay
//! pattern: constant, periodic, stochastic, or otherwise. The crate provides
//!
//! * [`network`]: state vectors, maps, orbits and the `d_max` metric;
//! * [`lipschitz`]: analytic, sampled and verified Lipschitz matrices;
//! * [`spectral`]: spectral radius (power method and a small-`n` exact
//!   oracle), row-independence closures and joint-spectral-radius bounds;
//! * [`delay`]: delay distributions, delay-space lifting of maps and of
//!   Lipschitz matrices;
//! * [`switched`]: switched networks, delay/switch schedules, simulation and
//!   certification of switched sets;
//! * [`models`]: Cohen–Grossberg networks and lifted linear delay systems;
//! * [`catalog`]: ready-made reference systems used by tests and the CLI.
//!
//! The crate is `no_std` (it needs `alloc`).
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod certificate;
pub mod delay;
pub mod error;
pub mod lipschitz;
pub mod matrix;
pub mod models;
pub mod network;
pub mod spectral;
pub mod switched;

pub use certificate::{StabilityCertificate, Verdict};
pub use delay::{DelayDistribution, DelayedMap, LiftedState};
pub use error::{Error, Result};
pub use lipschitz::{LipschitzMatrix, Provenance};
pub use matrix::{Matrix, SparseMatrix};
pub use network::{NetworkMap, Orbit, StateVector};
pub use spectral::{JsrBounds, MatrixSet, PowerOptions};
