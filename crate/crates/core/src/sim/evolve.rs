use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::{hadamard_conjugate, SpinDensityMatrix};
use crate::error::{Error, Result};

/// Initial mean phonon number of each mode (thermal, 0 for the ground state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionalInit {
    pub mean_occupation: Vec<f64>,
}

impl MotionalInit {
    pub fn ground(n_modes: usize) -> Self {
        MotionalInit { mean_occupation: vec![0.0; n_modes] }
    }

    pub fn thermal(mean_occupation: Vec<f64>) -> Result<Self> {
        let m = MotionalInit { mean_occupation };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean_occupation.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(Error::InvalidInput("mean occupations must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Spin-dependent displacements `alpha_{j,m}(tau)` left at the end of a gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDisplacementSet {
    /// `N x M`.
    pub alpha: DMatrix<C64>,
}

impl ResidualDisplacementSet {
    pub fn zeros(n_ions: usize, n_modes: usize) -> Self {
        ResidualDisplacementSet { alpha: DMatrix::zeros(n_ions, n_modes) }
    }

    /// Rows of `subset` only.
    pub fn restrict(&self, subset: &[usize]) -> Self {
        ResidualDisplacementSet { alpha: DMatrix::from_fn(subset.len(), self.alpha.ncols(), |i, m| self.alpha[(subset[i], m)]) }
    }
}

fn check_theta(theta: &DMatrix<f64>, n: usize) -> Result<()> {
    if theta.nrows() != n || theta.ncols() != n {
        return Err(Error::InvalidInput(format!("coupling matrix is {}x{} for {n} qubits", theta.nrows(), theta.ncols())));
    }
    let scale = theta.amax().max(1.0);
    if (theta - theta.transpose()).amax() > 1e-12 * scale || theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("coupling matrix must be finite and symmetric".into()));
    }
    Ok(())
}

/// `x`-basis eigenvalue `s_j = +-1` of qubit `j` in basis state `idx`.
fn spin(idx: usize, j: usize, n: usize) -> f64 {
    if (idx >> (n - 1 - j)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_{j<j'} theta_{j,j'} s_j s_j'` for every `x`-basis state.
fn ising_energies(theta: &DMatrix<f64>, n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|s| {
            let mut e = 0.0;
            for j in 0..n {
                for jp in (j + 1)..n {
                    e += theta[(j, jp)] * spin(s, j, n) * spin(s, jp, n);
                }
            }
            e
        })
        .collect()
}

/// `rho -> U rho U^dagger` with `U = exp[-i sum_{j<j'} theta_{j,j'} X_j X_j']`.
pub fn evolve_ideal(theta: &DMatrix<f64>, rho_in: &SpinDensityMatrix) -> Result<SpinDensityMatrix> {
    evolve(theta, None, rho_in)
}

/// Gate with residual spin-motion displacement, motion traced out.
///
/// In the `x` basis the element `(s, s')` picks up the Ising phase and, per
/// mode, `exp[-(2 n + 1) |D_s - D_s'|^2 / 2] exp[i Im(D_s D_s'^*)]` with
/// `D_s = sum_j s_j alpha_{j,m}`.
pub fn evolve_with_residuals(
    theta: &DMatrix<f64>,
    residuals: &ResidualDisplacementSet,
    motion: &MotionalInit,
    rho_in: &SpinDensityMatrix,
) -> Result<SpinDensityMatrix> {
    motion.validate()?;
    let n = rho_in.n_qubits;
    if residuals.alpha.nrows() != n || residuals.alpha.ncols() != motion.mean_occupation.len() {
        return Err(Error::InvalidInput(format!(
            "residual displacements are {}x{}, expected {n} ions and {} modes",
            residuals.alpha.nrows(),
            residuals.alpha.ncols(),
            motion.mean_occupation.len()
        )));
    }
    if residuals.alpha.iter().all(|a| *a == C64::new(0.0, 0.0)) {
        return evolve(theta, None, rho_in);
    }
    evolve(theta, Some((residuals, motion)), rho_in)
}

fn evolve(
    theta: &DMatrix<f64>,
    motion: Option<(&ResidualDisplacementSet, &MotionalInit)>,
    rho_in: &SpinDensityMatrix,
) -> Result<SpinDensityMatrix> {
    let n = rho_in.n_qubits;
    check_theta(theta, n)?;
    let dim = rho_in.dim();
    let energies = ising_energies(theta, n);
    let branches: Option<(Vec<Vec<C64>>, &[f64])> = motion.map(|(res, mot)| {
        let mm = res.alpha.ncols();
        let d = (0..dim)
            .map(|s| (0..mm).map(|m| (0..n).map(|j| res.alpha[(j, m)] * spin(s, j, n)).sum()).collect())
            .collect();
        (d, mot.mean_occupation.as_slice())
    });

    let mut rho = rho_in.rho.clone();
    hadamard_conjugate(&mut rho);
    for c in 0..dim {
        for r in 0..dim {
            let mut factor = C64::from_polar(1.0, -(energies[r] - energies[c]));
            if let Some((d, nbar)) = &branches {
                let mut log = C64::new(0.0, 0.0);
                for (m, &nm) in nbar.iter().enumerate() {
                    let (a, b) = (d[r][m], d[c][m]);
                    log += C64::new(-(2.0 * nm + 1.0) * (a - b).norm_sqr() / 2.0, (a * b.conj()).im);
                }
                factor *= log.exp();
            }
            rho[(r, c)] *= factor;
        }
    }
    hadamard_conjugate(&mut rho);
    Ok(SpinDensityMatrix { n_qubits: n, rho })
}
