use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use super::evolve::{evolve_with_residuals, MotionalInit, ResidualDisplacementSet};
use super::state::{check_size, equatorial_rotation, SpinDensityMatrix};
use crate::error::{Error, Result};

/// RMS deviation of the fringe from a single cosine above which the fit is
/// flagged.
pub const PARITY_FIT_TOLERANCE: f64 = 1e-3;

/// Parity fringe `<prod_j Z_j>` against analysis phase, with its fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityScan {
    /// `(phi, parity)` on a uniform grid over `[0, 2 pi)`.
    pub samples: Vec<(f64, f64)>,
    /// Amplitude `C` of the `cos(N phi + phi0)` component.
    pub contrast: f64,
    pub phase: f64,
    /// Harmonic with the largest amplitude (excluding the mean).
    pub dominant_frequency: usize,
    /// RMS of `parity - C cos(N phi + phi0)`.
    pub fit_residual: f64,
    pub fit_flagged: bool,
}

/// Parity under the analysis pulse `exp[-i (pi/4)(cos phi X + sin phi Y)]` on
/// every qubit.
pub fn parity_at(rho: &SpinDensityMatrix, phi: f64) -> f64 {
    let mut r = rho.clone();
    r.apply_all(&equatorial_rotation(FRAC_PI_4, phi));
    r.rho.diagonal().iter().enumerate().map(|(i, z)| if i.count_ones() % 2 == 0 { z.re } else { -z.re }).sum()
}

/// Samples the parity fringe at `n_points` phases and fits the `N`-th
/// harmonic by discrete Fourier projection.
pub fn parity_scan(rho: &SpinDensityMatrix, n_points: usize) -> Result<ParityScan> {
    let n = rho.n_qubits;
    if n_points < 4 * n + 1 {
        return Err(Error::InvalidInput(format!("parity scan of {n} qubits needs at least {} points", 4 * n + 1)));
    }
    let samples: Vec<(f64, f64)> = (0..n_points)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / n_points as f64;
            (phi, parity_at(rho, phi))
        })
        .collect();
    let harmonic = |k: usize| -> C64 {
        samples.iter().map(|&(phi, p)| C64::from_polar(p, -(k as f64) * phi)).sum::<C64>() * (2.0 / n_points as f64)
    };
    let h = harmonic(n);
    let (contrast, phase) = (h.norm(), h.arg());
    let dominant_frequency = (1..=n_points / 2).max_by(|&a, &b| harmonic(a).norm().total_cmp(&harmonic(b).norm())).unwrap_or(n);
    let fit_residual = (samples
        .iter()
        .map(|&(phi, p)| (p - contrast * (n as f64 * phi + phase).cos()).powi(2))
        .sum::<f64>()
        / n_points as f64)
        .sqrt();
    Ok(ParityScan { samples, contrast, phase, dominant_frequency, fit_residual, fit_flagged: fit_residual > PARITY_FIT_TOLERANCE })
}

/// Fidelity estimate and whether it had to be clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    pub clamped: bool,
}

/// `F = (P_{0...0} + P_{1...1}) / 2 + C / 2`.
pub fn ghz_fidelity(populations: &[f64], contrast: f64) -> Result<FidelityEstimate> {
    if populations.len() < 2 || !populations.len().is_power_of_two() {
        return Err(Error::InvalidInput(format!("{} populations is not 2^N with N >= 1", populations.len())));
    }
    if populations.iter().chain([&contrast]).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite population or contrast".into()));
    }
    let raw = 0.5 * (populations[0] + populations[populations.len() - 1]) + 0.5 * contrast;
    let fidelity = raw.clamp(0.0, 1.0);
    Ok(FidelityEstimate { fidelity, clamped: fidelity != raw })
}

/// Outcome of GHZ preparation on a register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub n_qubits: usize,
    pub rho_out: SpinDensityMatrix,
    /// Indexed by bitstring integer, qubit 1 most significant.
    pub populations: Vec<f64>,
    pub parity: ParityScan,
    pub parity_contrast: f64,
    pub fidelity: f64,
    pub fidelity_clamped: bool,
    pub warnings: Vec<String>,
}

/// Default number of analysis phases for `n` qubits.
pub fn default_parity_points(n: usize) -> usize {
    (8 * n + 1).max(33)
}

/// Runs the gate from `|0...0>`, adds the `pi/2` x-rotations on every qubit
/// for odd `N`, and scores the result as a GHZ state.
pub fn prepare_ghz(
    theta: &DMatrix<f64>,
    residuals: &ResidualDisplacementSet,
    motion: &MotionalInit,
    parity_points: usize,
) -> Result<GateResult> {
    let n = theta.nrows();
    check_size(n)?;
    let mut rho = evolve_with_residuals(theta, residuals, motion, &SpinDensityMatrix::ground(n)?)?;
    if n % 2 == 1 {
        rho.apply_all(&equatorial_rotation(FRAC_PI_4, 0.0));
    }
    let populations = rho.populations();
    let parity = parity_scan(&rho, parity_points.max(4 * n + 1))?;
    let mut warnings = Vec::new();
    let est = if n == 1 {
        warnings.push("single qubit: no entanglement, fidelity fixed at 0.5".to_string());
        FidelityEstimate { fidelity: 0.5, clamped: false }
    } else {
        ghz_fidelity(&populations, parity.contrast)?
    };
    if est.clamped {
        warnings.push("fidelity estimate clamped to [0, 1]".to_string());
    }
    if parity.fit_flagged {
        warnings.push(format!("parity fringe deviates from a single cosine (rms {:.2e})", parity.fit_residual));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(GateResult {
        n_qubits: n,
        populations,
        parity_contrast: parity.contrast,
        parity,
        fidelity: est.fidelity,
        fidelity_clamped: est.clamped,
        rho_out: rho,
        warnings,
    })
}

/// Coupling submatrix and displacement rows of the ions in `subset`.
pub fn restrict_register(
    theta: &DMatrix<f64>,
    residuals: &ResidualDisplacementSet,
    subset: &[usize],
) -> Result<(DMatrix<f64>, ResidualDisplacementSet)> {
    let n = theta.nrows();
    let mut seen = vec![false; n];
    for &j in subset {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidInput(format!("bad or repeated ion index {} in subset", j + 1)));
        }
    }
    if subset.is_empty() {
        return Err(Error::InvalidInput("empty subset".into()));
    }
    let sub = DMatrix::from_fn(subset.len(), subset.len(), |a, b| theta[(subset[a], subset[b])]);
    Ok((sub, residuals.restrict(subset)))
}
