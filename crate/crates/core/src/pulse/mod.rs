//! Discretely phase-modulated, sin^2-shaped bichromatic drives and every
//! quantity the gate constraints are written in.

mod diagnostics;
pub(crate) mod integrals;
pub(crate) mod kernels;
mod scheme;
mod window;

pub use diagnostics::{diagnose, trajectory_samples, DiagnosticsReport, SchemeDiagnostics, TrajectorySamples};
pub use kernels::{
    couplings, gs_gc_kernels, ordered_couplings, residual_displacements, scaled_couplings, scaled_detunings,
    scaled_displacements, scheme_kernels, ts_tc_kernels, SchemeKernels,
};
pub use scheme::{wrap_phase, PulseScheme, SchemeFile};
pub use window::{window_value, ShapingWindow};
