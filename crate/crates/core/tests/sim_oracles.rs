mod common;

use common::*;
use iongate::chain::{LambDickeMatrix, NormalModeData};
use iongate::constants::mhz;
use iongate::pulse::{diagnose, PulseScheme};
use iongate::sim::{evolve_ideal, evolve_with_residuals, MotionalInit, ResidualDisplacementSet, SpinDensityMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(n, n);
    for j in 0..n {
        for jp in (j + 1)..n {
            t[(j, jp)] = rng.random_range(-PI..PI);
            t[(jp, j)] = t[(j, jp)];
        }
    }
    t
}

fn random_pure(rng: &mut ChaCha8Rng, dim: usize) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Mixture of two random pure states.
fn random_state(rng: &mut ChaCha8Rng, n: usize) -> SpinDensityMatrix {
    let a = random_pure(rng, 1 << n);
    let b = random_pure(rng, 1 << n);
    let p = rng.random_range(0.0..1.0);
    SpinDensityMatrix::new(&a * a.adjoint() * c(p) + &b * b.adjoint() * c(1.0 - p)).unwrap()
}

#[test]
fn ideal_gate_matches_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=3 {
        for _ in 0..10 {
            let theta = random_theta(&mut rng, n);
            let rho = random_state(&mut rng, n);
            let u = ising_unitary(&theta);
            let expect = &u * &rho.rho * u.adjoint();
            let got = evolve_ideal(&theta, &rho).unwrap();
            let td = trace_distance(&got.rho, &expect);
            assert!(td < 1e-10, "n = {n}: {td}");
        }
    }
}

#[test]
fn residual_channel_matches_fock_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..=2 {
        for nbar in [0.0, 0.5] {
            for _ in 0..4 {
                let theta = random_theta(&mut rng, n);
                let alpha: Vec<C64> = (0..n)
                    .map(|_| C64::from_polar(rng.random_range(0.0..0.5), rng.random_range(-PI..PI)))
                    .collect();
                let rho = random_state(&mut rng, n);
                let expect = fock_evolution(&theta, &alpha, nbar, &rho.rho, 40);
                let res = ResidualDisplacementSet { alpha: DMatrix::from_column_slice(n, 1, &alpha) };
                let got = evolve_with_residuals(&theta, &res, &MotionalInit::thermal(vec![nbar]).unwrap(), &rho).unwrap();
                let td = trace_distance(&got.rho, &expect);
                assert!(td < 1e-8, "n = {n}, nbar = {nbar}: {td}");
            }
        }
    }
}

#[test]
fn full_displacement_matches_fock_truncation() {
    let theta = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.7, 0.0]);
    let alpha = [C64::from_polar(1.0, 0.3), C64::from_polar(0.0, 0.0)];
    let rho = SpinDensityMatrix::ground(2).unwrap();
    for nbar in [0.0, 0.5] {
        let expect = fock_evolution(&theta, &alpha, nbar, &rho.rho, 40);
        let res = ResidualDisplacementSet { alpha: DMatrix::from_column_slice(2, 1, &alpha) };
        let got = evolve_with_residuals(&theta, &res, &MotionalInit::thermal(vec![nbar]).unwrap(), &rho).unwrap();
        assert!(trace_distance(&got.rho, &expect) < 1e-8);
    }
}

/// Two ions on one mode, driven by a random segmented scheme: the closed-form
/// coupling and displacement fed to the reduced channel reproduce the
/// time-dependent Schroedinger evolution of the full drive.
#[test]
fn pulse_dynamics_match_schroedinger_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let nu = mhz(2.15);
    let mu = mhz(2.12);
    let kk = 4;
    let tau = 40e-6;
    let eta_vals = [0.06, -0.045];
    let modes = NormalModeData { frequencies: vec![nu], participation: DMatrix::from_column_slice(2, 1, &[0.8, -0.6]) };
    let eta = LambDickeMatrix { eta: DMatrix::from_column_slice(2, 1, &eta_vals) };
    for _ in 0..2 {
        let phases = DMatrix::from_fn(2, kk, |_, _| rng.random_range(-PI..PI));
        let amps = vec![mhz(rng.random_range(0.1..0.3)), mhz(rng.random_range(-0.3..-0.1))];
        let scheme = PulseScheme::new(mu, tau, phases, amps).unwrap();
        let diag = diagnose(&eta, &modes, &scheme, 1).unwrap();
        assert!(diag.max_alpha() > 0.05, "drive should leave visible residual motion");
        assert!(diag.theta[(0, 1)].abs() > 0.05, "drive should couple the ions");

        let psi = random_pure(&mut rng, 4);
        let delta = (nu - mu) * scheme.segment_duration();
        let expect = rk4_spin_motion(&eta_vals, delta, &scheme, &psi, 40, 4000);
        let got = evolve_with_residuals(
            &diag.theta,
            &ResidualDisplacementSet { alpha: diag.alpha.clone() },
            &MotionalInit::ground(1),
            &SpinDensityMatrix::from_pure(&psi).unwrap(),
        )
        .unwrap();
        let td = trace_distance(&got.rho, &expect);
        assert!(td < 1e-8, "{td}");
    }
}
