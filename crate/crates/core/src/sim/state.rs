use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 10;

/// Density matrix of `n_qubits` spins in the computational basis, qubit 1 the
/// most significant bit of the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinDensityMatrix {
    pub n_qubits: usize,
    pub rho: DMatrix<C64>,
}

impl SpinDensityMatrix {
    pub fn new(rho: DMatrix<C64>) -> Result<Self> {
        let dim = rho.nrows();
        if dim != rho.ncols() || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!("density matrix must be 2^N square, got {}x{}", dim, rho.ncols())));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_size(n_qubits)?;
        Ok(SpinDensityMatrix { n_qubits, rho })
    }

    /// `|0...0><0...0|`.
    pub fn ground(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        Ok(SpinDensityMatrix { n_qubits, rho })
    }

    pub fn from_pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        let v = psi / C64::new(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Hermitian within 1e-12, unit trace within 1e-12, eigenvalues above
    /// -1e-10.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        let tr = self.trace();
        let min_eig = self.eigenvalues().first().copied().unwrap_or(0.0);
        if herm > 1e-12 || (tr - C64::new(1.0, 0.0)).norm() > 1e-12 || min_eig < -1e-10 {
            return Err(Error::InvalidInput(format!(
                "not a density matrix: hermiticity error {herm:e}, trace {tr}, smallest eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// Diagonal in the computational basis, indexed by bitstring.
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    /// `|| rho - other ||_1 / 2`.
    pub fn trace_distance(&self, other: &SpinDensityMatrix) -> f64 {
        let diff = &self.rho - &other.rho;
        let h = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        0.5 * h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
    }

    /// Applies the 2x2 unitary `u` to qubit `q` (0-based, most significant
    /// first): `rho -> U rho U^dagger`.
    pub fn apply_single(&mut self, q: usize, u: &[[C64; 2]; 2]) {
        let n = self.n_qubits;
        let bit = 1 << (n - 1 - q);
        let dim = self.dim();
        for col in 0..dim {
            for r0 in (0..dim).filter(|r| r & bit == 0) {
                let r1 = r0 | bit;
                let (a, b) = (self.rho[(r0, col)], self.rho[(r1, col)]);
                self.rho[(r0, col)] = u[0][0] * a + u[0][1] * b;
                self.rho[(r1, col)] = u[1][0] * a + u[1][1] * b;
            }
        }
        for row in 0..dim {
            for c0 in (0..dim).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let (a, b) = (self.rho[(row, c0)], self.rho[(row, c1)]);
                self.rho[(row, c0)] = a * u[0][0].conj() + b * u[0][1].conj();
                self.rho[(row, c1)] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    /// Applies `u` to every qubit.
    pub fn apply_all(&mut self, u: &[[C64; 2]; 2]) {
        for q in 0..self.n_qubits {
            self.apply_single(q, u);
        }
    }
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidInput(format!("register size must be 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

/// `exp[-i angle (cos phi sigma_x + sin phi sigma_y)]`.
pub fn equatorial_rotation(angle: f64, phi: f64) -> [[C64; 2]; 2] {
    let c = C64::new(angle.cos(), 0.0);
    let s = angle.sin();
    let off = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
    let off_conj = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
    [[c, off], [off_conj, c]]
}

/// In-place normalized Walsh-Hadamard transform of rows and columns, mapping
/// between the computational basis and the `sigma_x` eigenbasis (bit 0 is
/// `|+>`).
pub(crate) fn hadamard_conjugate(rho: &mut DMatrix<C64>) {
    let dim = rho.nrows();
    let norm = 1.0 / dim as f64;
    let mut h = 1;
    while h < dim {
        for i in (0..dim).step_by(2 * h) {
            for k in i..(i + h) {
                for c in 0..dim {
                    let (a, b) = (rho[(k, c)], rho[(k + h, c)]);
                    rho[(k, c)] = a + b;
                    rho[(k + h, c)] = a - b;
                }
                for r in 0..dim {
                    let (a, b) = (rho[(r, k)], rho[(r, k + h)]);
                    rho[(r, k)] = a + b;
                    rho[(r, k + h)] = a - b;
                }
            }
        }
        h *= 2;
    }
    rho.scale_mut(norm);
}
