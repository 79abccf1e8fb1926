//! Rydberg-antiblockade two-atom gate simulator.
//!
//! The crate builds the full rotated-frame and effective two-atom
//! Hamiltonians, integrates pure and dissipative dynamics, and runs the GHZ
//! and W state fusion protocols built on the resulting gate.

pub mod dynamics;
pub mod error;
pub mod fusion;
pub mod hamiltonian;
pub mod quantum;
pub mod sweep;

pub use error::{Error, Result};
