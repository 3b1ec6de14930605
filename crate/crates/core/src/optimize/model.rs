//! Residuals and Jacobians of the reduced synthesis problem.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::reduce::{symmetry_reduce, SymmetryMap};
use super::SynthesisProblem;
use crate::error::Result;
use crate::pulse::kernels::ModeIntegrals;
use crate::pulse::ShapingWindow;

/// Couplings below this magnitude are clamped inside the logarithm and
/// contribute no gradient.
pub const COUPLING_FLOOR: f64 = 1e-12;

/// Entries `eta_{j,m}` at most this fraction of `max |eta|` are treated as
/// uncoupled and dropped from the displacement objective.
pub const ETA_MASK_RATIO: f64 = 1e-9;

/// Which log-couplings the constraint residuals combine.
#[derive(Debug, Clone)]
pub(crate) struct ConstraintLayout {
    /// One representative ion pair per mirror orbit.
    pub pairs: Vec<(usize, usize)>,
    /// Residual `r = basis * log|g_pairs|`.
    pub basis: DMatrix<f64>,
}

impl ConstraintLayout {
    pub fn new(n: usize, mirror: bool) -> Self {
        let image = |(j, jp): (usize, usize)| (n - 1 - jp, n - 1 - j);
        let mut pairs = Vec::new();
        for j in 0..n {
            for jp in (j + 1)..n {
                let p = (j, jp);
                if !mirror || p <= image(p) {
                    pairs.push(p);
                }
            }
        }
        if mirror && n == 4 {
            // pairs: (1,2) (1,3) (1,4) (2,3); g12 = g13 and g12 g13 = g14 g23.
            let basis = DMatrix::from_row_slice(2, 4, &[1.0, -1.0, 0.0, 0.0, 1.0, 1.0, -1.0, -1.0]);
            return ConstraintLayout { pairs, basis };
        }
        let class = |j: usize| if mirror { j.min(n - 1 - j) } else { j };
        let n_classes = if mirror { n.div_ceil(2) } else { n };
        let mut a = DMatrix::zeros(pairs.len(), n_classes);
        for (r, &(j, jp)) in pairs.iter().enumerate() {
            a[(r, class(j))] += 1.0;
            a[(r, class(jp))] += 1.0;
        }
        ConstraintLayout { basis: left_null_space(&a), pairs }
    }

    #[cfg(test)]
    pub fn n_residuals(&self) -> usize {
        self.basis.nrows()
    }

    /// Residuals from a full symmetric coupling matrix.
    pub fn residuals(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let y = DVector::from_iterator(self.pairs.len(), self.pairs.iter().map(|&(j, jp)| log_floor(g[(j, jp)])));
        (&self.basis * y).iter().copied().collect()
    }
}

pub(crate) fn log_floor(g: f64) -> f64 {
    g.abs().max(COUPLING_FLOOR).ln()
}

/// Orthonormal rows spanning `{y : a^T y = 0}`, each with its first
/// significant entry positive.
fn left_null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let r = a.nrows();
    if r == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(a * a.transpose());
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for i in 0..r {
        if eig.eigenvalues[i].abs() < 1e-10 * scale {
            let mut v = eig.eigenvectors.column(i).into_owned();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v = -v;
                }
            }
            rows.push(v);
        }
    }
    DMatrix::from_fn(rows.len(), r, |i, p| rows[i][p])
}

/// Everything needed to evaluate the synthesis residuals at a phase vector.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub map: SymmetryMap,
    pub layout: ConstraintLayout,
    /// `(Ts + i Tc)[(m, k)]`.
    dker: DMatrix<C64>,
    /// Objective entries `(j, m)`.
    pub mask: Vec<(usize, usize)>,
    /// Ion classes of each representative pair.
    pub pair_classes: Vec<(usize, usize)>,
    /// Hermitian part of each representative pair's coupling form.
    h: Vec<DMatrix<C64>>,
}

/// Residuals and Jacobians at one point.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    /// `[Re d; Im d]` over the masked entries.
    pub d: DVector<f64>,
    pub d_jac: DMatrix<f64>,
    /// Scaled couplings of the representative pairs.
    pub g: DVector<f64>,
    pub g_jac: DMatrix<f64>,
    /// Log-compatibility residuals.
    pub c: DVector<f64>,
}

impl Evaluation {
    pub fn objective(&self) -> f64 {
        self.d.norm_squared()
    }

    pub fn gradient(&self) -> DVector<f64> {
        2.0 * self.d_jac.transpose() * &self.d
    }

    pub fn constraint_norm(&self) -> f64 {
        self.c.amax()
    }
}

impl Model {
    pub fn new(problem: &SynthesisProblem) -> Result<Self> {
        let map = symmetry_reduce(problem)?;
        let n = problem.eta.n_ions();
        let kk = problem.n_segments;
        let ts = problem.gate_time / kk as f64;
        let deltas: Vec<f64> = problem.modes.frequencies.iter().map(|nu| (nu - problem.detuning) * ts).collect();
        let ints = ModeIntegrals::compute(&deltas, ShapingWindow::new(kk), f64::INFINITY);
        let dker = ints.moments.map(|z| z * C64::new(0.0, -1.0));

        let eta = &problem.eta.eta;
        let cut = ETA_MASK_RATIO * eta.amax();
        let mask = (0..n)
            .flat_map(|j| (0..eta.ncols()).map(move |m| (j, m)))
            .filter(|&(j, m)| eta[(j, m)].abs() > cut)
            .collect();

        let layout = ConstraintLayout::new(n, problem.mirror);
        let blocks: Vec<DMatrix<C64>> = (0..deltas.len()).map(|m| ints.block(m)).collect();
        let h = layout
            .pairs
            .iter()
            .map(|&(j, jp)| {
                let mut gm = DMatrix::<C64>::zeros(kk, kk);
                for (m, block) in blocks.iter().enumerate() {
                    let w = C64::new(0.0, 0.5 * eta[(j, m)] * eta[(jp, m)]);
                    gm += block * w;
                }
                (&gm + gm.adjoint()) * C64::new(0.5, 0.0)
            })
            .collect();
        let class_of = |j: usize| map.classes.iter().position(|c| c.contains(&j)).expect("ion has a class");
        let pair_classes = layout.pairs.iter().map(|&(j, jp)| (class_of(j), class_of(jp))).collect();
        Ok(Model { map, layout, dker, mask, pair_classes, h })
    }

    pub fn n_vars(&self) -> usize {
        self.map.n_vars()
    }

    pub fn evaluate(&self, vars: &[f64], with_jacobian: bool) -> Evaluation {
        let phases = self.map.expand(vars);
        let kk = phases.ncols();
        let nv = self.n_vars();
        let u = phases.map(|p| C64::from_polar(1.0, p));

        let rows = self.mask.len();
        let mut d = DVector::zeros(2 * rows);
        let mut d_jac = DMatrix::zeros(if with_jacobian { 2 * rows } else { 0 }, nv);
        for (r, &(j, m)) in self.mask.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..kk {
                let term = self.dker[(m, k)] * u[(j, k)].conj();
                acc += term;
                if with_jacobian {
                    if let Some((v, s)) = self.map.entry(j, k) {
                        let dt = term * C64::new(0.0, -s);
                        d_jac[(r, v)] += dt.re;
                        d_jac[(rows + r, v)] += dt.im;
                    }
                }
            }
            d[r] = acc.re;
            d[rows + r] = acc.im;
        }

        let np = self.layout.pairs.len();
        let mut g = DVector::zeros(np);
        let mut g_jac = DMatrix::zeros(if with_jacobian { np } else { 0 }, nv);
        for (p, &(j, jp)) in self.layout.pairs.iter().enumerate() {
            let h = &self.h[p];
            let uj = u.row(j).transpose();
            let ujp = u.row(jp).transpose();
            let hv = h * &ujp;
            g[p] = uj.dotc(&hv).re;
            if with_jacobian {
                let wh = h.adjoint() * &uj;
                for k in 0..kk {
                    if let Some((v, s)) = self.map.entry(j, k) {
                        g_jac[(p, v)] += s * (uj[k].conj() * hv[k]).im;
                    }
                    if let Some((v, s)) = self.map.entry(jp, k) {
                        g_jac[(p, v)] -= s * (wh[k].conj() * ujp[k]).im;
                    }
                }
            }
        }
        let y = g.map(log_floor);
        let c = &self.layout.basis * &y;
        Evaluation { d, d_jac, g, g_jac, c }
    }
}
