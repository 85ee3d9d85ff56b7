//! Exact-diagonalization laboratory for timelike quantum energy teleportation
//! (TQET) on mixed-field Ising chains.
//!
//! Alice measures `sigma_A` on the ground state, the chain evolves for a time
//! `t`, and Bob applies `exp(-i (-1)^b theta sigma_B)` conditioned on Alice's
//! bit. The crate computes the closed-form energy balance of that protocol,
//! its optimal angle, the operational efficiency, the time-separated
//! correlation diagnostics, and the parameter sweeps built on them.

pub mod error;
pub mod kernel;
pub mod model;
pub mod experiments;
pub mod protocol;
pub mod timelike;
pub mod validation;

pub use error::{Error, Result};
pub use faer::c64;
