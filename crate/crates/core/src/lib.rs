//! Two-excitation bound states in waveguide-coupled qubit arrays with a
//! period-three position modulation.
//!
//! The crate builds the photon-mediated non-Hermitian Hamiltonians of finite
//! and infinite arrays, extracts bound-state bands and their Chern numbers over
//! the (K, φ₀) torus, and characterises radiative edge states and long-lived
//! interface states. See the `examples/` directory for one runnable program per
//! capability.

pub mod error;
pub mod lattice;
pub mod eig;
pub mod finite;
pub mod bloch;
pub mod chern;
pub mod shift_invert;
pub mod dos;
pub mod interface;
pub mod export;
pub mod cli;

pub use error::{Error, Result};
