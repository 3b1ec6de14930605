//! Independent numerical oracles and fixture helpers shared by the
//! integration tests. Nothing here calls the closed-form code paths it is used
//! to check.

#![allow(dead_code)]

use iongate::chain::{fit_trap_frequencies, lamb_dicke_parameters, transverse_normal_modes, LambDickeMatrix, NormalModeData, TrapConfig};
use iongate::constants::mhz;
use iongate::pulse::{PulseScheme, SchemeFile};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const MEASURED_3: [f64; 3] = [2.184, 2.127, 2.044];
pub const MEASURED_4: [f64; 4] = [2.186, 2.147, 2.091, 2.020];

/// Chain fitted to a measured transverse spectrum given in MHz.
pub struct FittedChain {
    pub config: TrapConfig,
    pub rms_residual: f64,
    pub modes: NormalModeData,
    pub eta: LambDickeMatrix,
}

pub fn fitted_chain(measured_mhz: &[f64]) -> FittedChain {
    let measured: Vec<f64> = measured_mhz.iter().map(|&f| mhz(f)).collect();
    let template = TrapConfig::new(measured.len(), mhz(0.5), measured[0]);
    let fit = fit_trap_frequencies(&measured, &template, f64::INFINITY).expect("fit");
    chain_for(fit.config, fit.rms_residual)
}

pub fn chain_for(config: TrapConfig, rms_residual: f64) -> FittedChain {
    let modes = transverse_normal_modes(&config).expect("modes");
    let eta = lamb_dicke_parameters(&modes, &config).expect("eta");
    FittedChain { config, rms_residual, modes, eta }
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_scheme(name: &str) -> PulseScheme {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    SchemeFile::from_json(&text).and_then(|f| f.to_scheme()).expect("fixture parses")
}

// ---------------------------------------------------------------- quadrature

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G7_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += pair * GK_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * G7_WEIGHTS[i / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

fn adapt(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64, tol: f64, depth: usize) -> C64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod (7/15) integral of a complex function on `[a, b]`.
pub fn integrate(mut f: impl FnMut(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    if b <= a {
        return C64::new(0.0, 0.0);
    }
    adapt(&mut f, a, b, tol, 40)
}

/// `integral_a^b dy integral_c^{min(d, y)} dx f(y, x)` by nested adaptive quadrature.
pub fn integrate_2d(f: impl Fn(f64, f64) -> C64, (a, b): (f64, f64), (c, d): (f64, f64), tol: f64) -> C64 {
    integrate(|y| integrate(|x| f(y, x), c, d.min(y), 0.1 * tol), a, b, tol)
}

/// sin^2-edged window in units of the segment duration, written out
/// directly.
pub fn window(s: f64, n_segments: usize) -> f64 {
    let k = n_segments as f64;
    let rise = (0.5 * PI * s).sin().powi(2);
    let fall = (0.5 * PI * (k - s)).sin().powi(2);
    if s < 1.0 && s > k - 1.0 {
        rise.min(fall)
    } else if s < 1.0 {
        rise
    } else if s > k - 1.0 {
        fall
    } else {
        1.0
    }
}

/// `integral_k w(s) e^{i delta s} ds` over segment `k`.
pub fn quad_moment(delta: f64, k: usize, n_segments: usize) -> C64 {
    integrate(|s| C64::from_polar(window(s, n_segments), delta * s), k as f64, (k + 1) as f64, 1e-14)
}

/// `integral_k ds2 integral_l ds1 [s1 < s2] w w e^{i delta (s2 - s1)}`.
pub fn quad_pair(delta: f64, k: usize, l: usize, n_segments: usize) -> C64 {
    integrate_2d(
        |s2, s1| C64::from_polar(window(s2, n_segments) * window(s1, n_segments), delta * (s2 - s1)),
        (k as f64, (k + 1) as f64),
        (l as f64, (l + 1) as f64),
        1e-13,
    )
}

// ---------------------------------------------------------------- operators

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

/// `X` on qubit `j` of `n` (qubit 0 most significant).
pub fn x_on(j: usize, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(1, 1, c(1.0));
    for q in 0..n {
        let f = if q == j { pauli_x() } else { DMatrix::identity(2, 2) };
        m = kron(&m, &f);
    }
    m
}

/// Truncated annihilation operator on `dim` Fock states.
pub fn annihilation(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |r, col| if col == r + 1 { c((col as f64).sqrt()) } else { c(0.0) })
}

pub fn thermal_state(nbar: f64, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |r, col| {
        if r == col {
            c(nbar.powi(r as i32) / (nbar + 1.0).powi(r as i32 + 1))
        } else {
            c(0.0)
        }
    })
}

/// `exp[-i sum_{j<j'} theta X_j X_j']` by dense matrix exponential.
pub fn ising_unitary(theta: &DMatrix<f64>) -> DMatrix<C64> {
    let n = theta.nrows();
    let dim = 1 << n;
    let mut gen = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..n {
        for jp in (j + 1)..n {
            gen += (x_on(j, n) * x_on(jp, n)) * C64::new(0.0, -theta[(j, jp)]);
        }
    }
    gen.exp()
}

/// Spin-motion evolution with one mode truncated at `fock` levels:
/// `exp[sum_j X_j (alpha_j a^dag - alpha_j^* a) - i sum_{j<j'} theta X_j X_j']`
/// on `rho_spin (x) rho_thermal`, motion traced out.
pub fn fock_evolution(theta: &DMatrix<f64>, alpha: &[C64], nbar: f64, rho_spin: &DMatrix<C64>, fock: usize) -> DMatrix<C64> {
    let n = theta.nrows();
    let dim_s = 1 << n;
    let a = annihilation(fock);
    let ad = a.adjoint();
    let id_f = DMatrix::<C64>::identity(fock, fock);
    let mut gen = DMatrix::<C64>::zeros(dim_s * fock, dim_s * fock);
    for j in 0..n {
        let disp = &ad * alpha[j] - &a * alpha[j].conj();
        gen += kron(&x_on(j, n), &disp);
        for jp in (j + 1)..n {
            gen += kron(&(x_on(j, n) * x_on(jp, n)), &id_f) * C64::new(0.0, -theta[(j, jp)]);
        }
    }
    let u = gen.exp();
    let rho = kron(rho_spin, &thermal_state(nbar, fock));
    let out = &u * rho * u.adjoint();
    partial_trace_motion(&out, dim_s, fock)
}

pub fn partial_trace_motion(rho: &DMatrix<C64>, dim_s: usize, fock: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim_s, dim_s, |r, col| (0..fock).map(|f| rho[(r * fock + f, col * fock + f)]).sum())
}

pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * c(0.5);
    0.5 * h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
}

/// Integrates `i d psi/ds = H(s) psi` for the segmented drive of `scheme`
/// on ions coupled to a single mode, in segment time units, by classical
/// Runge-Kutta with `steps_per_segment` steps per segment. Returns the
/// reduced spin density matrix.
///
/// `H(s) = sum_j X_j (c_j(s) a^dag + c_j^* a)` with
/// `c_j = eta_j Omega_j tau_s w(s) e^{i (delta s - phi_j(s))} / 2`.
pub fn rk4_spin_motion(
    eta: &[f64],
    delta: f64,
    scheme: &PulseScheme,
    psi_spin: &DVector<C64>,
    fock: usize,
    steps_per_segment: usize,
) -> DMatrix<C64> {
    let n = eta.len();
    let kk = scheme.n_segments();
    let amps = scheme.scaled_amplitudes();
    let dim_s = 1usize << n;
    let sqrt: Vec<f64> = (0..=fock).map(|f| (f as f64).sqrt()).collect();

    let coeffs = |s: f64, k: usize| -> Vec<C64> {
        (0..n)
            .map(|j| C64::from_polar(0.5 * eta[j] * amps[j] * window(s, kk), delta * s - scheme.phases[(j, k)]))
            .collect()
    };
    // -i H psi, with X_j flipping bit j of the spin index and a^dag raising
    // the Fock index.
    let deriv = |s: f64, k: usize, psi: &DVector<C64>| -> DVector<C64> {
        let cs = coeffs(s, k);
        let mut out = DVector::zeros(psi.len());
        for j in 0..n {
            let bit = 1 << (n - 1 - j);
            for sp in 0..dim_s {
                let src = (sp ^ bit) * fock;
                let dst = sp * fock;
                for f in 0..fock {
                    let mut acc = C64::new(0.0, 0.0);
                    if f > 0 {
                        acc += cs[j] * sqrt[f] * psi[src + f - 1];
                    }
                    if f + 1 < fock {
                        acc += cs[j].conj() * sqrt[f + 1] * psi[src + f + 1];
                    }
                    out[dst + f] += acc;
                }
            }
        }
        out * C64::new(0.0, -1.0)
    };

    let mut vac = DVector::zeros(fock);
    vac[0] = c(1.0);
    let mut psi = psi_spin.kronecker(&vac);
    let h = 1.0 / steps_per_segment as f64;
    for k in 0..kk {
        for i in 0..steps_per_segment {
            let s = k as f64 + i as f64 * h;
            let k1 = deriv(s, k, &psi);
            let k2 = deriv(s + 0.5 * h, k, &(&psi + &k1 * c(0.5 * h)));
            let k3 = deriv(s + 0.5 * h, k, &(&psi + &k2 * c(0.5 * h)));
            let k4 = deriv(s + h, k, &(&psi + &k3 * c(h)));
            psi += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
        }
    }
    let rho = &psi * psi.adjoint();
    partial_trace_motion(&rho, 1 << n, fock)
}

// ---------------------------------------------------------------- chain

/// Dimensionless potential of ions at transverse offsets `x` and axial
/// positions `z`, lengths in the Coulomb length scale and energies in
/// `M nu_ax^2 l^2`.
pub fn scaled_potential(x: &[f64], z: &[f64], beta: f64) -> f64 {
    let n = x.len();
    let mut v = 0.0;
    for i in 0..n {
        v += 0.5 * (beta * beta * x[i] * x[i] + z[i] * z[i]);
        for j in (i + 1)..n {
            v += 1.0 / ((x[i] - x[j]).powi(2) + (z[i] - z[j]).powi(2)).sqrt();
        }
    }
    v
}

/// Central-difference Hessian of `f` at `p` with step `h`.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, p: &[f64], h: f64) -> DMatrix<f64> {
    let n = p.len();
    let eval = |di: (usize, f64), dj: (usize, f64)| {
        let mut q = p.to_vec();
        q[di.0] += di.1;
        q[dj.0] += dj.1;
        f(&q)
    };
    DMatrix::from_fn(n, n, |i, j| {
        (eval((i, h), (j, h)) - eval((i, h), (j, -h)) - eval((i, -h), (j, h)) + eval((i, -h), (j, -h))) / (4.0 * h * h)
    })
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, p: &[f64], h: f64) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}
