//! Pilot-wave (de Broglie-Bohm) dynamics for ensembles out of quantum
//! equilibrium, and the protocols that such ensembles make possible.
//!
//! Units are `hbar = m = 1`.

pub mod basis;
pub mod ensembles;
pub mod error;
pub mod field;
pub mod grid;
pub mod packet;
pub mod potential;
pub mod propagate;
pub mod rng;
mod spectral;
pub mod stats;
pub mod trajectory;
pub mod velocity;
pub mod wavefunction;

pub use error::{Error, Result};
