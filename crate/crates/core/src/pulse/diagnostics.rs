use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use super::kernels::{
    couplings, kernels_from, ordered_couplings, residual_displacements, scaled_detunings, symmetrize,
    ModeIntegrals, SchemeKernels,
};
use super::scheme::PulseScheme;
use super::window::ShapingWindow;
use crate::chain::{LambDickeMatrix, NormalModeData};
use crate::error::{Error, Result};

/// Time-resolved phase-space displacements and couplings.
#[derive(Debug, Clone)]
pub struct TrajectorySamples {
    /// Sample times, s. Uniform, aligned with segment boundaries.
    pub times: Vec<f64>,
    /// `alpha_{j,m}(t)` per sample, `N x M`.
    pub alpha: Vec<DMatrix<C64>>,
    /// `theta_{j,j'}(t)` per sample, `N x N`, symmetric.
    pub theta: Vec<DMatrix<f64>>,
}

/// Samples `alpha(t)` and `theta(t)` at `samples_per_segment` points per
/// segment (plus `t = 0`).
pub fn trajectory_samples(
    eta: &LambDickeMatrix,
    modes: &NormalModeData,
    scheme: &PulseScheme,
    samples_per_segment: usize,
) -> Result<TrajectorySamples> {
    if samples_per_segment < 1 {
        return Err(Error::InvalidInput("need at least one sample per segment".into()));
    }
    super::kernels::scheme_kernels(eta, modes, scheme)?;
    let kk = scheme.n_segments();
    let window = ShapingWindow::new(kk);
    let deltas = scaled_detunings(modes, scheme);
    let ts = scheme.segment_duration();
    let total = kk * samples_per_segment;

    let mut out = TrajectorySamples { times: Vec::new(), alpha: Vec::new(), theta: Vec::new() };
    for i in 0..=total {
        let s = if i == total { kk as f64 } else { i as f64 / samples_per_segment as f64 };
        let ints = ModeIntegrals::compute(&deltas, window, s);
        let kernels = kernels_from(&eta.eta, &ints, ts);
        let (_, alpha, _, theta) = evaluate(eta, &kernels, scheme);
        out.times.push(s * ts);
        out.alpha.push(alpha);
        out.theta.push(theta);
    }
    Ok(out)
}

fn evaluate(
    eta: &LambDickeMatrix,
    kernels: &SchemeKernels,
    scheme: &PulseScheme,
) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<f64>, DMatrix<f64>) {
    let d = super::kernels::scaled_displacements(kernels, &scheme.phases);
    let alpha = residual_displacements(eta, &d, scheme);
    let g = symmetrize(&ordered_couplings(kernels, &scheme.phases));
    let theta = couplings(&g, scheme);
    (d, alpha, g, theta)
}

/// Verification report for a scheme on a chain.
#[derive(Debug, Clone)]
pub struct SchemeDiagnostics {
    /// Scaled residual displacements `d`, `N x M`, in units of `tau_s`.
    pub d: DMatrix<C64>,
    /// `alpha_{j,m}(tau)`.
    pub alpha: DMatrix<C64>,
    /// Symmetric scaled couplings, units of `tau_s^2`.
    pub g: DMatrix<f64>,
    /// `theta_{j,j'}(tau)`, rad.
    pub theta: DMatrix<f64>,
    pub trajectories: TrajectorySamples,
}

impl SchemeDiagnostics {
    /// `sum_{j,m} |d_{j,m}|^2` over every ion and mode.
    pub fn total_displacement(&self) -> f64 {
        self.d.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_alpha(&self) -> f64 {
        self.alpha.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
    }

    /// Largest `|theta - target| / |target|` over pairs where both ions are
    /// driven; `None` when fewer than two ions are driven.
    pub fn max_theta_deviation(&self, scheme: &PulseScheme, target: f64) -> Option<f64> {
        let n = self.theta.nrows();
        let mut worst: Option<f64> = None;
        for j in 0..n {
            for jp in (j + 1)..n {
                if scheme.peak_amplitudes[j] == 0.0 || scheme.peak_amplitudes[jp] == 0.0 {
                    continue;
                }
                let dev = (self.theta[(j, jp)] - target).abs() / target.abs();
                worst = Some(worst.map_or(dev, |w| w.max(dev)));
            }
        }
        worst
    }

    pub fn report(&self, scheme: &PulseScheme) -> DiagnosticsReport {
        let rows_c = |m: &DMatrix<C64>, f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|j| m.row(j).iter().map(f).collect()).collect()
        };
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { (0..m.nrows()).map(|j| m.row(j).iter().copied().collect()).collect() };
        DiagnosticsReport {
            total_displacement: self.total_displacement(),
            max_alpha: self.max_alpha(),
            max_theta_deviation: self.max_theta_deviation(scheme, FRAC_PI_4),
            d_re: rows_c(&self.d, |z| z.re),
            d_im: rows_c(&self.d, |z| z.im),
            alpha_re: rows_c(&self.alpha, |z| z.re),
            alpha_im: rows_c(&self.alpha, |z| z.im),
            g: rows(&self.g),
            theta: rows(&self.theta),
        }
    }
}

/// Plain-data form of [`SchemeDiagnostics`] at the gate time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub total_displacement: f64,
    pub max_alpha: f64,
    /// Relative to `pi/4`.
    pub max_theta_deviation: Option<f64>,
    pub d_re: Vec<Vec<f64>>,
    pub d_im: Vec<Vec<f64>>,
    pub alpha_re: Vec<Vec<f64>>,
    pub alpha_im: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

/// Recomputes every constraint quantity of `scheme` from scratch.
pub fn diagnose(
    eta: &LambDickeMatrix,
    modes: &NormalModeData,
    scheme: &PulseScheme,
    samples_per_segment: usize,
) -> Result<SchemeDiagnostics> {
    let kernels = super::kernels::scheme_kernels(eta, modes, scheme)?;
    let (d, alpha, g, theta) = evaluate(eta, &kernels, scheme);
    let trajectories = trajectory_samples(eta, modes, scheme, samples_per_segment)?;
    Ok(SchemeDiagnostics { d, alpha, g, theta, trajectories })
}
