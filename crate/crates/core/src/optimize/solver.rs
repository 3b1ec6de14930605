//! Augmented-Lagrangian outer loop around a damped Gauss-Newton
//! (Levenberg-Marquardt) inner solve.

use nalgebra::{DMatrix, DVector};

use super::model::{log_floor, Model};

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    pub objective_tolerance: f64,
    pub constraint_tolerance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LocalSolution {
    pub vars: Vec<f64>,
    pub iterations: usize,
}

/// Joint phase / log-amplitude formulation. Variables are the reduced phases
/// followed by one `ln |Omega tau_s|` per ion class; class signs are fixed.
/// Constraint `p` reads `s_a s_b exp(l_a + l_b) g_p / target - 1 = 0`.
struct Joint<'a> {
    model: &'a Model,
    class_signs: &'a [f64],
    target: f64,
}

impl Joint<'_> {
    fn n_phases(&self) -> usize {
        self.model.n_vars()
    }

    /// Objective residual, constraint residuals and their Jacobians.
    fn eval(&self, x: &[f64], jac: bool) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let nv = self.n_phases();
        let ev = self.model.evaluate(&x[..nv], jac);
        let np = ev.g.len();
        let nx = x.len();
        let mut e = DVector::zeros(np);
        let mut e_jac = DMatrix::zeros(if jac { np } else { 0 }, nx);
        for (p, &(a, b)) in self.model.pair_classes.iter().enumerate() {
            let scale = self.class_signs[a] * self.class_signs[b] * (x[nv + a] + x[nv + b]).exp() / self.target;
            let theta = scale * ev.g[p];
            e[p] = theta - 1.0;
            if jac {
                for v in 0..nv {
                    e_jac[(p, v)] = scale * ev.g_jac[(p, v)];
                }
                e_jac[(p, nv + a)] += theta;
                e_jac[(p, nv + b)] += theta;
            }
        }
        let mut d_jac = DMatrix::zeros(if jac { ev.d.len() } else { 0 }, nx);
        if jac {
            d_jac.columns_mut(0, nv).copy_from(&ev.d_jac);
        }
        (ev.d, d_jac, e, e_jac)
    }

    /// Log-amplitudes that best fit the couplings at `phases`.
    fn initial_logs(&self, phases: &[f64]) -> Vec<f64> {
        let ev = self.model.evaluate(phases, false);
        let nc = self.class_signs.len();
        let np = ev.g.len();
        if np == 0 {
            return vec![0.0; nc];
        }
        let a = DMatrix::from_fn(np, nc, |p, c| {
            let (x, y) = self.model.pair_classes[p];
            (x == c) as u8 as f64 + (y == c) as u8 as f64
        });
        let b = DVector::from_iterator(np, ev.g.iter().map(|g| self.target.abs().ln() - log_floor(*g)));
        a.svd(true, true).solve(&b, 1e-12).map(|v| v.iter().copied().collect()).unwrap_or_else(|_| vec![0.0; nc])
    }
}

/// Stacked residual `[d; sqrt(rho/2) (e + lambda/rho)]`, whose squared norm is
/// the augmented Lagrangian up to a constant.
fn merit(joint: &Joint, x: &[f64], lambda: &DVector<f64>, rho: f64, jac: bool) -> (DVector<f64>, DMatrix<f64>) {
    let (d, d_jac, e, e_jac) = joint.eval(x, jac);
    let w = (0.5 * rho).sqrt();
    let (nd, ne) = (d.len(), e.len());
    let mut r = DVector::zeros(nd + ne);
    r.rows_mut(0, nd).copy_from(&d);
    for i in 0..ne {
        r[nd + i] = w * (e[i] + lambda[i] / rho);
    }
    let mut j = DMatrix::zeros(if jac { nd + ne } else { 0 }, x.len());
    if jac {
        j.rows_mut(0, nd).copy_from(&d_jac);
        j.rows_mut(nd, ne).copy_from(&(e_jac * w));
    }
    (r, j)
}

/// Minimizes `|r(x)|^2` from `x0`. Returns the final point and the number of
/// accepted steps.
fn levenberg_marquardt(
    f: impl Fn(&[f64], bool) -> (DVector<f64>, DMatrix<f64>),
    x0: Vec<f64>,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = x0.len();
    let mut x = x0;
    if n == 0 {
        return (x, 0);
    }
    let (mut r, mut jac) = f(&x, true);
    let mut cost = r.norm_squared();
    let mut jtj = jac.transpose() * &jac;
    let mut grad = jac.transpose() * &r;
    let mut mu = 1e-3 * jtj.diagonal().amax().max(1e-12);
    let mut nu = 2.0;
    let mut accepted = 0;
    for _ in 0..max_iter {
        if grad.amax() < 1e-15 || cost < 1e-30 {
            break;
        }
        let mut a = jtj.clone();
        for i in 0..n {
            a[(i, i)] += mu;
        }
        let Some(chol) = a.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let step = chol.solve(&(-&grad));
        if step.norm() < 1e-15 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()) {
            break;
        }
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let (tr, _) = f(&trial, false);
        let trial_cost = tr.norm_squared();
        let predicted = -(2.0 * grad.dot(&step) + (&jac * &step).norm_squared());
        let gain = if predicted > 0.0 { (cost - trial_cost) / predicted } else { -1.0 };
        if gain > 0.0 && trial_cost.is_finite() {
            x = trial;
            (r, jac) = f(&x, true);
            cost = r.norm_squared();
            jtj = jac.transpose() * &jac;
            grad = jac.transpose() * &r;
            mu *= (1.0_f64 / 3.0).max(1.0 - (2.0 * gain - 1.0).powi(3));
            nu = 2.0;
            accepted += 1;
        } else {
            mu *= nu;
            nu *= 2.0;
            if !mu.is_finite() || mu > 1e30 {
                break;
            }
        }
    }
    (x, accepted)
}

/// Local solve from reduced phases `x0` with ion class `c` driven with sign
/// `class_signs[c]`.
pub(crate) fn solve_local(
    model: &Model,
    class_signs: &[f64],
    target: f64,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> LocalSolution {
    let joint = Joint { model, class_signs, target };
    let nv = joint.n_phases();
    let np = model.pair_classes.len();
    let mut x = x0.clone();
    x.extend(joint.initial_logs(&x0));
    let mut lambda = DVector::zeros(np);
    let mut rho = 10.0;
    let mut iterations = 0;
    let mut prev_e = f64::INFINITY;
    for _ in 0..opts.max_outer.max(1) {
        let (next, it) = levenberg_marquardt(|v, jac| merit(&joint, v, &lambda, rho, jac), x, opts.max_inner);
        x = next;
        iterations += it;
        let (d, _, e, _) = joint.eval(&x, false);
        let e_norm = e.amax();
        if e_norm < opts.constraint_tolerance && d.norm_squared() < opts.objective_tolerance {
            break;
        }
        lambda += &e * rho;
        if e_norm > 0.25 * prev_e {
            rho = (rho * 10.0).min(1e10);
        }
        prev_e = e_norm;
    }
    x.truncate(nv);
    LocalSolution { vars: x, iterations }
}
