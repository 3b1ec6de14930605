//! Linear ion-chain mechanics: equilibrium positions, transverse normal
//! modes, Lamb-Dicke parameters, and recovery of trap frequencies from a
//! measured mode spectrum.
//!
//! Chain mechanics run in dimensionless units: lengths in
//! `l = (e^2 / (4 pi eps0 M nu_ax^2))^(1/3)` and squared frequencies in
//! units of `nu_ax^2`. Everything crossing the module boundary is SI.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{ELEMENTARY_CHARGE, EPSILON_0, HBAR, RAMAN_WAVELENGTH, YB171_ION_MASS};
use crate::error::{Error, Result};

/// Harmonic trap holding a linear chain of identical ions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Axial secular frequency, rad/s.
    pub axial_freq: f64,
    /// Single-ion transverse (x) secular frequency, rad/s.
    pub transverse_freq: f64,
    /// Ion mass, kg.
    pub ion_mass: f64,
    /// Raman laser centre wavelength, m.
    pub raman_wavelength: f64,
}

impl TrapConfig {
    /// A 171Yb+ chain driven at 377 nm.
    pub fn new(n_ions: usize, axial_freq: f64, transverse_freq: f64) -> Self {
        TrapConfig {
            n_ions,
            axial_freq,
            transverse_freq,
            ion_mass: YB171_ION_MASS,
            raman_wavelength: RAMAN_WAVELENGTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ions == 0 {
            return Err(Error::InvalidInput("n_ions must be at least 1".into()));
        }
        let positive = [
            ("axial_freq", self.axial_freq),
            ("transverse_freq", self.transverse_freq),
            ("ion_mass", self.ion_mass),
            ("raman_wavelength", self.raman_wavelength),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Characteristic inter-ion length scale `l`, m.
    pub fn length_scale(&self) -> f64 {
        let k = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PI * EPSILON_0);
        (k / (self.ion_mass * self.axial_freq * self.axial_freq)).cbrt()
    }
}

/// Transverse normal modes of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalModeData {
    /// Mode angular frequencies, rad/s, sorted descending (COM first).
    pub frequencies: Vec<f64>,
    /// Participation matrix indexed `[(ion, mode)]`; columns are orthonormal.
    pub participation: DMatrix<f64>,
}

impl NormalModeData {
    pub fn n_ions(&self) -> usize {
        self.participation.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Largest deviation of `b^T b` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let b = &self.participation;
        let gram = b.transpose() * b;
        let n = gram.nrows();
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Largest deviation of `|b_{j,m}|` from `|b_{N+1-j,m}|`.
    pub fn mirror_error(&self) -> f64 {
        mirror_deviation(&self.participation)
    }
}

/// Lamb-Dicke parameters `eta[(ion, mode)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambDickeMatrix {
    pub eta: DMatrix<f64>,
}

impl LambDickeMatrix {
    pub fn n_ions(&self) -> usize {
        self.eta.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.eta.ncols()
    }

    /// Largest deviation of `|eta_{j,m}|` from `|eta_{N+1-j,m}|`.
    pub fn mirror_deviation(&self) -> f64 {
        mirror_deviation(&self.eta)
    }
}

fn mirror_deviation(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for c in 0..m.ncols() {
            worst = worst.max((m[(j, c)].abs() - m[(n - 1 - j, c)].abs()).abs());
        }
    }
    worst
}

/// Net scaled force on every ion: confinement plus Coulomb repulsion.
pub(crate) fn scaled_forces(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut f = vec![0.0; n];
    for i in 0..n {
        let mut acc = u[i];
        for k in 0..n {
            if k != i {
                let d = u[i] - u[k];
                acc -= d.signum() / (d * d);
            }
        }
        f[i] = acc;
    }
    f
}

fn force_jacobian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for k in 0..n {
            if k != i {
                let d3 = (u[i] - u[k]).abs().powi(3);
                diag += 2.0 / d3;
                j[(i, k)] = -2.0 / d3;
            }
        }
        j[(i, i)] = diag;
    }
    j
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Equilibrium positions in units of the length scale, ascending.
pub(crate) fn scaled_equilibrium(n: usize) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-13;
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let spacing = 2.018 / (n as f64).powf(0.559);
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing).collect();

    if !newton_relax(&mut u, TOL) {
        // Fallback: overdamped relaxation down the potential, then Newton again.
        for _ in 0..20_000 {
            let f = scaled_forces(&u);
            let step = 0.05 / (1.0 + 4.0 * n as f64);
            for (x, fx) in u.iter_mut().zip(&f) {
                *x -= step * fx;
            }
        }
        if !newton_relax(&mut u, TOL) {
            return Err(Error::EquilibriumNotConverged { residual: max_abs(&scaled_forces(&u)) });
        }
    }

    // Enforce exact mirror antisymmetry, then polish.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    u = sym;
    newton_relax(&mut u, TOL);
    let residual = max_abs(&scaled_forces(&u));
    if residual > 1e-12 {
        return Err(Error::EquilibriumNotConverged { residual });
    }
    Ok(u)
}

/// Damped Newton iteration on the force balance. Returns true on convergence.
fn newton_relax(u: &mut Vec<f64>, tol: f64) -> bool {
    let mut f = scaled_forces(u);
    let mut norm = max_abs(&f);
    for _ in 0..200 {
        if norm < tol {
            return true;
        }
        let jac = force_jacobian(u);
        let rhs = -DVector::from_column_slice(&f);
        let Some(step) = jac.lu().solve(&rhs) else {
            return false;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x + lambda * s).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered {
                let ft = scaled_forces(&trial);
                let nt = max_abs(&ft);
                if nt < norm || nt < tol {
                    *u = trial;
                    f = ft;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return norm < tol;
        }
    }
    norm < tol
}

/// Curvature matrix of the Coulomb interaction for transverse displacements,
/// in units of `nu_ax^2`: the transverse Hessian is `beta^2 I - C` with
/// `beta = nu_x / nu_ax`.
pub(crate) fn coulomb_curvature(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            if k != i {
                let inv = 1.0 / (u[i] - u[k]).abs().powi(3);
                c[(i, i)] += inv;
                c[(i, k)] = -inv;
            }
        }
    }
    c
}

/// Axial equilibrium positions, m, sorted ascending.
pub fn equilibrium_positions(cfg: &TrapConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let l = cfg.length_scale();
    Ok(scaled_equilibrium(cfg.n_ions)?.into_iter().map(|x| x * l).collect())
}

/// Transverse normal modes, COM first.
pub fn transverse_normal_modes(cfg: &TrapConfig) -> Result<NormalModeData> {
    cfg.validate()?;
    let u = scaled_equilibrium(cfg.n_ions)?;
    let beta = cfg.transverse_freq / cfg.axial_freq;
    let n = cfg.n_ions;
    let hessian = DMatrix::<f64>::identity(n, n) * (beta * beta) - coulomb_curvature(&u);
    let eig = SymmetricEigen::new(hessian);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let nu2 = cfg.axial_freq * cfg.axial_freq;
    let mut frequencies = Vec::with_capacity(n);
    let mut participation = DMatrix::zeros(n, n);
    for (m, &idx) in order.iter().enumerate() {
        let lam = eig.eigenvalues[idx];
        if lam <= 0.0 {
            return Err(Error::UnstableChain { mode: m + 1, freq_sq: lam * nu2 });
        }
        frequencies.push(cfg.axial_freq * lam.sqrt());
        let mut col = eig.eigenvectors.column(idx).into_owned();
        let lead = col.iter().copied().find(|x| x.abs() > 1e-9).unwrap_or(1.0);
        if lead < 0.0 {
            col.neg_mut();
        }
        participation.set_column(m, &col);
    }
    Ok(NormalModeData { frequencies, participation })
}

/// Lamb-Dicke parameter of a single ion oscillating at `nu` (rad/s).
pub fn single_ion_lamb_dicke(nu: f64, cfg: &TrapConfig) -> f64 {
    let k_eff = 2.0 * 2f64.sqrt() * PI / cfg.raman_wavelength;
    k_eff * (HBAR / (2.0 * cfg.ion_mass * nu)).sqrt()
}

/// `eta_{j,m} = b_{j,m} (2 sqrt2 pi / lambda) sqrt(hbar / (2 M nu_m))`.
pub fn lamb_dicke_parameters(modes: &NormalModeData, cfg: &TrapConfig) -> Result<LambDickeMatrix> {
    cfg.validate()?;
    if modes.n_ions() != cfg.n_ions || modes.n_modes() != modes.participation.ncols() {
        return Err(Error::InvalidInput("mode data inconsistent with trap configuration".into()));
    }
    let mut eta = modes.participation.clone();
    for (m, &nu) in modes.frequencies.iter().enumerate() {
        if !(nu > 0.0) {
            return Err(Error::InvalidInput(format!("mode {} has non-positive frequency", m + 1)));
        }
        let scale = single_ion_lamb_dicke(nu, cfg);
        eta.column_mut(m).scale_mut(scale);
    }
    Ok(LambDickeMatrix { eta })
}

/// Outcome of fitting trap frequencies to a measured spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapFit {
    pub config: TrapConfig,
    /// RMS of model minus measured mode frequencies, rad/s.
    pub rms_residual: f64,
}

/// Finds the axial and transverse trap frequencies whose transverse mode
/// spectrum best matches `measured` (rad/s, descending) in least squares.
///
/// Mass, wavelength, and ion count come from `template`; its axial frequency
/// is only used when the spectrum cannot determine it (a single ion).
pub fn fit_trap_frequencies(measured: &[f64], template: &TrapConfig, tolerance: f64) -> Result<TrapFit> {
    template.validate()?;
    let n = template.n_ions;
    if measured.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} measured mode frequencies, got {}",
            measured.len()
        )));
    }
    if measured.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("measured frequencies must be positive".into()));
    }
    if measured.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("measured frequencies must be sorted descending".into()));
    }

    let mut config = *template;
    if n == 1 {
        config.transverse_freq = measured[0];
        return Ok(TrapFit { config, rms_residual: 0.0 });
    }

    // nu_m^2 = nu_x^2 - nu_ax^2 c_m with c_m the Coulomb curvature spectrum.
    let u = scaled_equilibrium(n)?;
    let mut c: Vec<f64> = SymmetricEigen::new(coulomb_curvature(&u)).eigenvalues.iter().copied().collect();
    c.sort_by(f64::total_cmp);

    let scale = measured[0] * measured[0];
    let target: Vec<f64> = measured.iter().map(|v| v / measured[0]).collect();

    // Linear least squares on squared frequencies as the starting point.
    let a = DMatrix::from_fn(n, 2, |i, k| if k == 0 { 1.0 } else { -c[i] });
    let b = DVector::from_iterator(n, target.iter().map(|v| v * v));
    let p0 = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("degenerate spectrum fit: {e}")))?;
    let mut p = [p0[0], p0[1]];

    let model = |p: &[f64; 2]| -> Option<Vec<f64>> {
        c.iter()
            .map(|cm| {
                let s = p[0] - p[1] * cm;
                (s > 0.0).then(|| s.sqrt())
            })
            .collect()
    };
    let cost = |p: &[f64; 2]| -> f64 {
        match model(p) {
            Some(v) => v.iter().zip(&target).map(|(x, y)| (x - y) * (x - y)).sum(),
            None => f64::INFINITY,
        }
    };

    let mut current = cost(&p);
    if !current.is_finite() || p[1] <= 0.0 {
        return Err(Error::FitResidual { rms: f64::INFINITY, tolerance });
    }
    let mut damping = 1e-6;
    for _ in 0..200 {
        let nu = model(&p).expect("feasible iterate");
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for i in 0..n {
            let r = nu[i] - target[i];
            let g = [0.5 / nu[i], -0.5 * c[i] / nu[i]];
            for x in 0..2 {
                jtr[x] += g[x] * r;
                for y in 0..2 {
                    jtj[x][y] += g[x] * g[y];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + damping);
            let m11 = jtj[1][1] * (1.0 + damping);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            let dx = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let dy = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let trial = [p[0] + dx, p[1] + dy];
            let tc = cost(&trial);
            if tc.is_finite() && tc <= current && trial[1] > 0.0 {
                let done = (current - tc) <= 1e-30 + 1e-15 * current;
                p = trial;
                current = tc;
                damping = (damping * 0.3).max(1e-12);
                improved = !done;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }

    config.transverse_freq = (p[0] * scale).sqrt();
    config.axial_freq = (p[1] * scale).sqrt();
    let rms_residual = (current / n as f64).sqrt() * measured[0];
    if rms_residual > tolerance {
        return Err(Error::FitResidual { rms: rms_residual, tolerance });
    }
    Ok(TrapFit { config, rms_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::mhz;

    fn cfg(n: usize) -> TrapConfig {
        TrapConfig::new(n, mhz(0.3), mhz(2.2))
    }

    #[test]
    fn single_ion_sits_at_centre() {
        assert_eq!(equilibrium_positions(&cfg(1)).unwrap(), vec![0.0]);
    }

    #[test]
    fn two_ion_positions_closed_form() {
        let u = scaled_equilibrium(2).unwrap();
        let expect = 0.25f64.cbrt();
        assert!((u[1] - expect).abs() < 1e-13);
        assert!((u[0] + expect).abs() < 1e-13);
    }

    #[test]
    fn three_ion_positions() {
        let u = scaled_equilibrium(3).unwrap();
        // Outer ions sit at (5/4)^(1/3).
        let outer = 1.25f64.cbrt();
        assert!((u[2] - outer).abs() < 1e-12);
        assert!(u[1].abs() < 1e-14);
        assert!((u[2] - 1.0772).abs() < 1e-4);
    }

    #[test]
    fn positions_balanced_and_antisymmetric() {
        for n in 1..=10 {
            let u = scaled_equilibrium(n).unwrap();
            assert!(max_abs(&scaled_forces(&u)) < 1e-12, "n={n}");
            for i in 0..n {
                assert!((u[i] + u[n - 1 - i]).abs() < 1e-13);
            }
            assert!(u.windows(2).all(|w| w[1] > w[0]));
            // Potential Hessian (force Jacobian) is positive definite.
            let eig = SymmetricEigen::new(force_jacobian(&u));
            assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn single_ion_mode() {
        let m = transverse_normal_modes(&cfg(1)).unwrap();
        assert_eq!(m.frequencies, vec![mhz(2.2)]);
        assert_eq!(m.participation[(0, 0)], 1.0);
    }

    #[test]
    fn two_ion_modes_analytic() {
        let c = cfg(2);
        let m = transverse_normal_modes(&c).unwrap();
        let tilt = (c.transverse_freq.powi(2) - c.axial_freq.powi(2)).sqrt();
        assert!((m.frequencies[0] / c.transverse_freq - 1.0).abs() < 1e-12);
        assert!((m.frequencies[1] / tilt - 1.0).abs() < 1e-12);
        let r = 0.5f64.sqrt();
        assert!((m.participation[(0, 0)] - r).abs() < 1e-12);
        assert!((m.participation[(1, 0)] - r).abs() < 1e-12);
        assert!((m.participation[(0, 1)] - r).abs() < 1e-12);
        assert!((m.participation[(1, 1)] + r).abs() < 1e-12);
    }

    #[test]
    fn mode_invariants_up_to_eight_ions() {
        for n in 1..=8 {
            let m = transverse_normal_modes(&cfg(n)).unwrap();
            assert!(m.orthonormality_error() < 1e-10, "n={n}");
            assert!(m.mirror_error() < 1e-10, "n={n}");
            assert!(m.frequencies.windows(2).all(|w| w[0] > w[1]));
            let com = 1.0 / (n as f64).sqrt();
            for j in 0..n {
                assert!((m.participation[(j, 0)] - com).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zigzag_instability_is_reported() {
        let bad = TrapConfig::new(6, mhz(1.0), mhz(1.2));
        match transverse_normal_modes(&bad) {
            Err(Error::UnstableChain { mode, freq_sq }) => {
                assert!((1..=6).contains(&mode));
                assert!(freq_sq <= 0.0);
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(TrapConfig::new(0, 1.0, 2.0).validate().is_err());
        assert!(TrapConfig::new(2, -1.0, 2.0).validate().is_err());
        assert!(equilibrium_positions(&TrapConfig::new(2, 1.0, f64::NAN)).is_err());
    }

    #[test]
    fn eta_mirror_signs_alternate_by_mode_parity() {
        for n in 2..=6 {
            let c = cfg(n);
            let eta = lamb_dicke_parameters(&transverse_normal_modes(&c).unwrap(), &c).unwrap().eta;
            for m in 0..n {
                let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
                for j in 0..n {
                    assert!((eta[(j, m)] - parity * eta[(n - 1 - j, m)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn com_eta_is_single_ion_value_over_sqrt_n() {
        let c = cfg(4);
        let modes = transverse_normal_modes(&c).unwrap();
        let eta = lamb_dicke_parameters(&modes, &c).unwrap();
        let single = single_ion_lamb_dicke(modes.frequencies[0], &c);
        for j in 0..4 {
            assert!((eta.eta[(j, 0)] - single / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_scales_with_inverse_sqrt_frequency() {
        let c = cfg(3);
        let modes = transverse_normal_modes(&c).unwrap();
        let mut doubled = modes.clone();
        doubled.frequencies.iter_mut().for_each(|f| *f *= 2.0);
        let a = lamb_dicke_parameters(&modes, &c).unwrap().eta;
        let b = lamb_dicke_parameters(&doubled, &c).unwrap().eta;
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((y - x / 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_ion_eta_at_377nm() {
        // Independent evaluation: k = 2 sqrt2 pi / lambda, x0 = sqrt(hbar / (2 M nu)).
        let nu = 2.0 * PI * 2.184e6;
        let k = 2.0 * 2f64.sqrt() * PI / 377e-9;
        let m = 170.936_325_8 * 1.660_539_066_60e-27 - 9.109_383_701_5e-31;
        let x0 = (1.054_571_817e-34 / (2.0 * m * nu)).sqrt();
        let eta = single_ion_lamb_dicke(nu, &cfg(1));
        assert!((eta - k * x0).abs() < 1e-15);
        assert!((eta - 0.0867).abs() < 5e-4);
    }

    #[test]
    fn fit_round_trip() {
        for n in 2..=5 {
            let truth = TrapConfig::new(n, mhz(0.31), mhz(2.17));
            let measured = transverse_normal_modes(&truth).unwrap().frequencies;
            let fit = fit_trap_frequencies(&measured, &TrapConfig::new(n, mhz(0.5), mhz(1.0)), 1.0).unwrap();
            assert!((fit.config.axial_freq / truth.axial_freq - 1.0).abs() < 1e-9, "n={n}");
            assert!((fit.config.transverse_freq / truth.transverse_freq - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        let t = TrapConfig::new(3, mhz(0.3), mhz(2.0));
        assert!(fit_trap_frequencies(&[mhz(2.0), mhz(1.9)], &t, 1.0).is_err());
        assert!(fit_trap_frequencies(&[mhz(1.9), mhz(2.0), mhz(1.8)], &t, 1.0).is_err());
    }

    #[test]
    fn fit_residual_above_tolerance_is_an_error() {
        let t = TrapConfig::new(3, mhz(0.3), mhz(2.0));
        let measured = [mhz(2.184), mhz(2.127), mhz(2.044)];
        match fit_trap_frequencies(&measured, &t, 1e-6) {
            Err(Error::FitResidual { rms, .. }) => assert!(rms > 1e-6),
            other => panic!("expected fit residual error, got {other:?}"),
        }
    }
}
