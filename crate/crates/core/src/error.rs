use thiserror::Error;

/// Errors produced anywhere in the synthesis / verification pipeline.
///
/// The variants fall into three families that the command-line front end maps
/// onto distinct exit codes: physics failures (unstable chain, bad fit),
/// optimizer failures, and malformed input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {t} outside the gate window [0, {tau}]")]
    Domain { t: f64, tau: f64 },

    #[error("equilibrium solve did not converge (residual force {residual:e})")]
    EquilibriumNotConverged { residual: f64 },

    #[error("linear chain unstable: transverse mode {mode} has squared frequency {freq_sq:e} (rad/s)^2")]
    UnstableChain { mode: usize, freq_sq: f64 },

    #[error("mode-frequency fit residual {rms:e} rad/s exceeds tolerance {tolerance:e} rad/s")]
    FitResidual { rms: f64, tolerance: f64 },

    #[error("Lamb-Dicke mirror relation violated by {deviation:e}")]
    MirrorSymmetry { deviation: f64 },

    #[error("coupling sign pattern is not 2-colorable: odd cycle through ions {cycle:?}")]
    SignPattern { cycle: Vec<usize> },

    #[error("no multistart converged: best objective {objective:e}, constraint residual {constraint:e}")]
    NoConvergence {
        objective: f64,
        constraint: f64,
        best_phases: Vec<Vec<f64>>,
    },
}

impl Error {
    /// True for errors that stem from the ion-chain physics (instability, fit).
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::EquilibriumNotConverged { .. }
                | Error::UnstableChain { .. }
                | Error::FitResidual { .. }
                | Error::MirrorSymmetry { .. }
        )
    }

    /// True for optimizer-side failures.
    pub fn is_solver(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::SignPattern { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
