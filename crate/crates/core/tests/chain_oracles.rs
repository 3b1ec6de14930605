mod common;

use common::*;
use iongate::chain::{equilibrium_positions, lamb_dicke_parameters, transverse_normal_modes, TrapConfig};
use iongate::constants::{mhz, HBAR};
use nalgebra::SymmetricEigen;
use std::f64::consts::PI;

#[test]
fn equilibrium_is_force_free() {
    for n in 2..=7 {
        let cfg = TrapConfig::new(n, mhz(0.5), mhz(2.2));
        let l = cfg.length_scale();
        let z: Vec<f64> = equilibrium_positions(&cfg).unwrap().iter().map(|p| p / l).collect();
        let x = vec![0.0; n];
        let grad = fd_gradient(|zz| scaled_potential(&x, zz, 4.4), &z, 1e-5);
        assert!(grad.iter().all(|g| g.abs() < 1e-8), "n = {n}: {grad:?}");
    }
}

#[test]
fn modes_match_finite_difference_hessian() {
    for n in 1..=6 {
        let cfg = TrapConfig::new(n, mhz(0.45), mhz(2.18));
        let beta = cfg.transverse_freq / cfg.axial_freq;
        let l = cfg.length_scale();
        let z: Vec<f64> = equilibrium_positions(&cfg).unwrap().iter().map(|p| p / l).collect();
        let hess = fd_hessian(|xx| scaled_potential(xx, &z, beta), &vec![0.0; n], 2e-4);
        let eig = SymmetricEigen::new(hess.clone());
        let mut nu: Vec<f64> = eig.eigenvalues.iter().map(|lam| cfg.axial_freq * lam.sqrt()).collect();
        nu.sort_by(|a, b| b.total_cmp(a));

        let modes = transverse_normal_modes(&cfg).unwrap();
        for (m, (a, b)) in modes.frequencies.iter().zip(&nu).enumerate() {
            assert!((a - b).abs() < 1e-7 * b, "n = {n}, mode {m}: {a} vs {b}");
        }
        // Participation vectors diagonalise the same Hessian.
        let b = &modes.participation;
        let d = b.transpose() * &hess * b;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(d[(i, j)].abs() < 1e-6 * beta * beta, "n = {n}: off-diagonal {}", d[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn lamb_dicke_matches_direct_formula() {
    let cfg = TrapConfig::new(4, mhz(0.41), mhz(2.186));
    let modes = transverse_normal_modes(&cfg).unwrap();
    let eta = lamb_dicke_parameters(&modes, &cfg).unwrap();
    let dk = 2.0 * 2f64.sqrt() * 2.0 * PI / cfg.raman_wavelength / 2.0;
    for m in 0..4 {
        let x0 = (HBAR / (2.0 * cfg.ion_mass * modes.frequencies[m])).sqrt();
        for j in 0..4 {
            let expect = modes.participation[(j, m)] * dk * x0;
            assert!((eta.eta[(j, m)] - expect).abs() < 1e-14);
        }
    }
}

#[test]
fn fitted_spectra_reproduce_measurements() {
    for (measured, bound_khz) in [(&MEASURED_3[..], 3.0), (&MEASURED_4[..], 5.0)] {
        let chain = fitted_chain(measured);
        assert!(chain.rms_residual < mhz(bound_khz * 1e-3), "{}", chain.rms_residual);
        for (a, b) in chain.modes.frequencies.iter().zip(measured) {
            assert!((a - mhz(*b)).abs() < mhz(2e-3));
        }
        assert!(chain.modes.orthonormality_error() < 1e-12);
        assert!(chain.eta.mirror_deviation() < 1e-12);
    }
}

#[test]
fn single_ion_fit_is_a_com_line() {
    let chain = fitted_chain(&[2.184]);
    assert_eq!(chain.modes.frequencies.len(), 1);
    assert!((chain.modes.frequencies[0] - mhz(2.184)).abs() < 1e-6);
    assert!((chain.modes.participation[(0, 0)] - 1.0).abs() < 1e-15);
}
