//! Synthesis and verification of phase-modulated global entangling gates on
//! linear ion chains.
//!
//! The pipeline runs [`chain`] (normal modes and Lamb-Dicke parameters) into
//! [`pulse`] (segment kernels, displacements, couplings), searches for phase
//! patterns with [`optimize`], and checks the result with [`sim`], which
//! evolves the spin register exactly and analyses GHZ-state preparation.

pub mod chain;
pub mod constants;
pub mod error;
pub mod optimize;
pub mod pulse;
pub mod sim;

pub use error::{Error, Result};
