//! Constraint kernels `Ts`, `Tc`, `Gs`, `Gc` and the scaled quantities built
//! from them.
//!
//! All kernels are dimensionless: time is measured in segment durations, so
//! `Ts`/`Tc` carry one factor of `tau_s` and `Gs`/`Gc` carry `tau_s^2`.
//! Amplitudes pair with them as `Omega * tau_s` (see
//! [`PulseScheme::scaled_amplitudes`]).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::integrals::segment_integrals;
use super::scheme::PulseScheme;
use super::window::ShapingWindow;
use crate::chain::{LambDickeMatrix, NormalModeData};
use crate::error::{Error, Result};

/// Per-mode window integrals of each segment, optionally truncated at some
/// scaled time.
#[derive(Debug, Clone)]
pub(crate) struct ModeIntegrals {
    /// `I[(m, k)] = integral_seg_k w(s) e^{i delta_m s} ds`.
    pub moments: DMatrix<C64>,
    /// `P[(m, k)]`, the nested integral over segment `k` with `s1 < s2`.
    pub triangles: DMatrix<C64>,
}

impl ModeIntegrals {
    pub fn compute(detunings: &[f64], window: ShapingWindow, upto: f64) -> Self {
        let kk = window.n_segments;
        let mm = detunings.len();
        let mut moments = DMatrix::zeros(mm, kk);
        let mut triangles = DMatrix::zeros(mm, kk);
        for k in 0..kk {
            let pieces: Vec<_> = window.segment_pieces(k).iter().filter_map(|p| p.truncated(upto)).collect();
            if pieces.is_empty() {
                continue;
            }
            for (m, &delta) in detunings.iter().enumerate() {
                let seg = segment_integrals(&pieces, delta);
                moments[(m, k)] = seg.moment;
                triangles[(m, k)] = seg.triangle;
            }
        }
        ModeIntegrals { moments, triangles }
    }

    /// Lower-triangular block `P_m[(k, l)] = integral_k integral_l w w e^{i delta (s2 - s1)}`
    /// with `s2` in segment `k`, `s1` in segment `l`, `s1 < s2`.
    pub fn block(&self, m: usize) -> DMatrix<C64> {
        let kk = self.moments.ncols();
        DMatrix::from_fn(kk, kk, |k, l| {
            if l < k {
                self.moments[(m, k)] * self.moments[(m, l)].conj()
            } else if l == k {
                self.triangles[(m, k)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Mode detunings `(nu_m - mu) * tau_s`.
pub fn scaled_detunings(modes: &NormalModeData, scheme: &PulseScheme) -> Vec<f64> {
    let ts = scheme.segment_duration();
    modes.frequencies.iter().map(|nu| (nu - scheme.detuning) * ts).collect()
}

/// All constraint kernels of a scheme on a given chain.
#[derive(Debug, Clone)]
pub struct SchemeKernels {
    /// Segment duration `tau_s`, s; the time unit of every kernel.
    pub segment_duration: f64,
    /// `Ts[(m, k)]`.
    pub ts: DMatrix<f64>,
    /// `Tc[(m, k)]`.
    pub tc: DMatrix<f64>,
    /// `Gs` per ordered ion pair, lower-triangular `K x K`, indexed `j * N + j'`.
    pub gs: Vec<DMatrix<f64>>,
    /// `Gc` per ordered ion pair, same layout as `gs`.
    pub gc: Vec<DMatrix<f64>>,
    pub n_ions: usize,
}

impl SchemeKernels {
    pub fn gs(&self, j: usize, jp: usize) -> &DMatrix<f64> {
        &self.gs[j * self.n_ions + jp]
    }

    pub fn gc(&self, j: usize, jp: usize) -> &DMatrix<f64> {
        &self.gc[j * self.n_ions + jp]
    }

    pub fn n_modes(&self) -> usize {
        self.ts.nrows()
    }

    pub fn n_segments(&self) -> usize {
        self.ts.ncols()
    }
}

fn check_shapes(eta: &LambDickeMatrix, modes: &NormalModeData, scheme: &PulseScheme) -> Result<()> {
    scheme.validate()?;
    if eta.n_ions() != scheme.n_ions() || eta.n_modes() != modes.n_modes() {
        return Err(Error::InvalidInput(format!(
            "Lamb-Dicke matrix is {}x{}, scheme has {} ions and chain {} modes",
            eta.n_ions(),
            eta.n_modes(),
            scheme.n_ions(),
            modes.n_modes()
        )));
    }
    Ok(())
}

pub(crate) fn ts_tc_from(ints: &ModeIntegrals) -> (DMatrix<f64>, DMatrix<f64>) {
    (ints.moments.map(|z| z.im), ints.moments.map(|z| -z.re))
}

/// Pair kernels from per-mode blocks: `Gs = -sum_m eta eta' Im P_m / 2`,
/// `Gc = -sum_m eta eta' Re P_m / 2`.
pub(crate) fn gs_gc_from(eta: &DMatrix<f64>, ints: &ModeIntegrals) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let n = eta.nrows();
    let kk = ints.moments.ncols();
    let blocks: Vec<DMatrix<C64>> = (0..ints.moments.nrows()).map(|m| ints.block(m)).collect();
    let mut gs = Vec::with_capacity(n * n);
    let mut gc = Vec::with_capacity(n * n);
    for j in 0..n {
        for jp in 0..n {
            let mut s = DMatrix::zeros(kk, kk);
            let mut c = DMatrix::zeros(kk, kk);
            for (m, block) in blocks.iter().enumerate() {
                let w = -0.5 * eta[(j, m)] * eta[(jp, m)];
                if w == 0.0 {
                    continue;
                }
                s.zip_apply(block, |x, p| *x += w * p.im);
                c.zip_apply(block, |x, p| *x += w * p.re);
            }
            gs.push(s);
            gc.push(c);
        }
    }
    (gs, gc)
}

/// `Ts[(m, k)] = integral_k w sin(delta_m t)`, `Tc[(m, k)] = -integral_k w cos(delta_m t)`.
pub fn ts_tc_kernels(modes: &NormalModeData, scheme: &PulseScheme) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    scheme.validate()?;
    let window = ShapingWindow::new(scheme.n_segments());
    let ints = ModeIntegrals::compute(&scaled_detunings(modes, scheme), window, f64::INFINITY);
    Ok(ts_tc_from(&ints))
}

/// `Gs` and `Gc` for every ordered ion pair, indexed `j * N + j'`.
pub fn gs_gc_kernels(
    eta: &LambDickeMatrix,
    modes: &NormalModeData,
    scheme: &PulseScheme,
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    check_shapes(eta, modes, scheme)?;
    let window = ShapingWindow::new(scheme.n_segments());
    let ints = ModeIntegrals::compute(&scaled_detunings(modes, scheme), window, f64::INFINITY);
    Ok(gs_gc_from(&eta.eta, &ints))
}

pub fn scheme_kernels(eta: &LambDickeMatrix, modes: &NormalModeData, scheme: &PulseScheme) -> Result<SchemeKernels> {
    check_shapes(eta, modes, scheme)?;
    let window = ShapingWindow::new(scheme.n_segments());
    let ints = ModeIntegrals::compute(&scaled_detunings(modes, scheme), window, f64::INFINITY);
    Ok(kernels_from(&eta.eta, &ints, scheme.segment_duration()))
}

pub(crate) fn kernels_from(eta: &DMatrix<f64>, ints: &ModeIntegrals, segment_duration: f64) -> SchemeKernels {
    let (ts, tc) = ts_tc_from(ints);
    let (gs, gc) = gs_gc_from(eta, ints);
    SchemeKernels { segment_duration, ts, tc, gs, gc, n_ions: eta.nrows() }
}

/// `d_{j,m} = (Ts_m . X_j + Tc_m . Y_j) + i (Tc_m . X_j - Ts_m . Y_j)`.
pub fn scaled_displacements(kernels: &SchemeKernels, phases: &DMatrix<f64>) -> DMatrix<C64> {
    let n = phases.nrows();
    let mm = kernels.n_modes();
    let x = phases.map(f64::cos);
    let y = phases.map(f64::sin);
    DMatrix::from_fn(n, mm, |j, m| {
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..kernels.n_segments() {
            let (s, c) = (kernels.ts[(m, k)], kernels.tc[(m, k)]);
            re += s * x[(j, k)] + c * y[(j, k)];
            im += c * x[(j, k)] - s * y[(j, k)];
        }
        C64::new(re, im)
    })
}

/// Coupling with ion `j` taken at the later time, summed literally:
/// `X_j Gs X_j' + Y_j Gs Y_j' + X_j Gc Y_j' - Y_j Gc X_j'`.
pub fn ordered_couplings(kernels: &SchemeKernels, phases: &DMatrix<f64>) -> DMatrix<f64> {
    let n = phases.nrows();
    let x = phases.map(f64::cos);
    let y = phases.map(f64::sin);
    DMatrix::from_fn(n, n, |j, jp| {
        let gs = kernels.gs(j, jp);
        let gc = kernels.gc(j, jp);
        let (xj, yj) = (x.row(j), y.row(j));
        let (xp, yp) = (x.row(jp).transpose(), y.row(jp).transpose());
        (xj * gs * &xp + yj * gs * &yp + xj * gc * &yp - yj * gc * &xp)[(0, 0)]
    })
}

/// Symmetric scaled coupling `g`: the average of both time orderings, zero
/// on the diagonal. This is the coefficient of `sigma_x^j sigma_x^j'` in the
/// second-order term of the propagator.
pub fn scaled_couplings(kernels: &SchemeKernels, phases: &DMatrix<f64>) -> DMatrix<f64> {
    let ord = ordered_couplings(kernels, phases);
    symmetrize(&ord)
}

pub(crate) fn symmetrize(ord: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ord.nrows();
    DMatrix::from_fn(n, n, |j, jp| if j == jp { 0.0 } else { 0.5 * (ord[(j, jp)] + ord[(jp, j)]) })
}

/// `alpha_{j,m}(tau) = eta_{j,m} Omega_j d_{j,m} / 2`.
pub fn residual_displacements(eta: &LambDickeMatrix, d: &DMatrix<C64>, scheme: &PulseScheme) -> DMatrix<C64> {
    let amps = scheme.scaled_amplitudes();
    DMatrix::from_fn(d.nrows(), d.ncols(), |j, m| d[(j, m)] * (0.5 * eta.eta[(j, m)] * amps[j]))
}

/// `theta_{j,j'} = Omega_j Omega_j' g_{j,j'}`.
pub fn couplings(g: &DMatrix<f64>, scheme: &PulseScheme) -> DMatrix<f64> {
    let amps = scheme.scaled_amplitudes();
    DMatrix::from_fn(g.nrows(), g.ncols(), |j, jp| amps[j] * amps[jp] * g[(j, jp)])
}
