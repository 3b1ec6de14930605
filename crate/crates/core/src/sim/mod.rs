//! Exact spin-register evolution under the gate, GHZ preparation and parity
//! analysis.
//!
//! Every term of the gate propagator is diagonal in the `sigma_x` basis, so
//! the spin density matrix is evolved elementwise there; residual phonon
//! displacement enters as a coherent-state overlap per mode.

mod evolve;
mod ghz;
mod state;

pub use evolve::{evolve_ideal, evolve_with_residuals, MotionalInit, ResidualDisplacementSet};
pub use ghz::{
    default_parity_points, ghz_fidelity, parity_at, parity_scan, prepare_ghz, restrict_register, FidelityEstimate,
    GateResult, ParityScan, PARITY_FIT_TOLERANCE,
};
pub use state::{equatorial_rotation, SpinDensityMatrix, MAX_QUBITS};
