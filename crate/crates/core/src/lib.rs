//! Simulation toolkit for qubit chains driven by engineered, noise-induced
//! dissipation.
//!
//! The crate is split along the physics:
//!
//! * [`qcore`]: states, sparse operators, Schrödinger/Lindblad integrators,
//!   Liouvillian construction and steady-state extraction.
//! * [`noise`]: binary-noise unravelling of pump/loss dissipation, pulse
//!   schedules, quantum trajectories and deterministic ensembles.
//! * [`chain`]: XX-chain Hamiltonians, lab-frame Floquet devices, effective
//!   couplings and decoherence channels.
//! * [`symmetry`]: Jordan–Wigner modes, the conserved classifier and its
//!   sectors, sector representative states and gates.
//!
//! Units: times in μs, angular frequencies and couplings in rad/μs, rates in
//! 1/μs. Sites are 1-based throughout the public API.

pub mod chain;
pub mod error;
pub mod fit;
pub mod noise;
pub mod qcore;
pub mod symmetry;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
