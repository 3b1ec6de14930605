use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SynthesisProblem;
use crate::error::{Error, Result};

/// Largest `| |eta_j| - |eta_{N+1-j}| |` accepted when mirror pairing is on.
pub const MIRROR_TOLERANCE: f64 = 1e-8;

/// Map between the reduced phase vector and the full `N x K` phase matrix.
///
/// Ions are grouped into classes that share a modulation pattern (mirror
/// pairs `{j, N+1-j}` when mirror pairing is on, singletons otherwise). Under
/// time antisymmetry `phi_{j,K+1-k} = -phi_{j,k}`, so only the first `K/2`
/// segments of each class are free; for odd `K` the middle segment is pinned
/// to zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryMap {
    pub n_ions: usize,
    pub n_segments: usize,
    /// Ion classes, each sorted ascending, ordered by their first ion.
    pub classes: Vec<Vec<usize>>,
    /// Free segments per class.
    pub free_segments: usize,
    /// Row-major `(j, k)` entries: reduced index and sign, or `None` for a
    /// pinned phase.
    entries: Vec<Option<(usize, i8)>>,
}

impl SymmetryMap {
    pub fn new(n_ions: usize, n_segments: usize, mirror: bool, antisymmetric: bool) -> Self {
        let class_of = |j: usize| if mirror { j.min(n_ions - 1 - j) } else { j };
        let n_classes = if mirror { n_ions.div_ceil(2) } else { n_ions };
        let classes: Vec<Vec<usize>> =
            (0..n_classes).map(|c| (0..n_ions).filter(|&j| class_of(j) == c).collect()).collect();
        let free_segments = if antisymmetric { n_segments / 2 } else { n_segments };
        let mut entries = Vec::with_capacity(n_ions * n_segments);
        for j in 0..n_ions {
            let base = class_of(j) * free_segments;
            for k in 0..n_segments {
                let mirror_k = n_segments - 1 - k;
                entries.push(if !antisymmetric {
                    Some((base + k, 1))
                } else if k < mirror_k {
                    Some((base + k, 1))
                } else if k > mirror_k {
                    Some((base + mirror_k, -1))
                } else {
                    None
                });
            }
        }
        SymmetryMap { n_ions, n_segments, classes, free_segments, entries }
    }

    pub fn n_vars(&self) -> usize {
        self.classes.len() * self.free_segments
    }

    /// Reduced index and sign of phase `(j, k)`.
    pub fn entry(&self, j: usize, k: usize) -> Option<(usize, f64)> {
        self.entries[j * self.n_segments + k].map(|(v, s)| (v, s as f64))
    }

    pub fn expand(&self, vars: &[f64]) -> DMatrix<f64> {
        assert_eq!(vars.len(), self.n_vars(), "reduced vector length");
        DMatrix::from_fn(self.n_ions, self.n_segments, |j, k| self.entry(j, k).map_or(0.0, |(v, s)| s * vars[v]))
    }

    /// Reads the reduced vector off a full phase matrix (first occurrence of
    /// each variable). Exact inverse of [`expand`](Self::expand) on its range.
    pub fn reduce(&self, phases: &DMatrix<f64>) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.n_vars()];
        for j in 0..self.n_ions {
            for k in 0..self.n_segments {
                if let Some((v, s)) = self.entry(j, k) {
                    if out[v].is_nan() {
                        out[v] = s * phases[(j, k)];
                    }
                }
            }
        }
        out
    }

    /// Largest deviation of `phases` from the subspace this map spans.
    pub fn subspace_deviation(&self, phases: &DMatrix<f64>) -> f64 {
        (self.expand(&self.reduce(phases)) - phases).amax()
    }
}

/// Builds the reduced variable map for `problem`, checking the Lamb-Dicke
/// mirror relation when mirror pairing is requested.
pub fn symmetry_reduce(problem: &SynthesisProblem) -> Result<SymmetryMap> {
    problem.validate()?;
    if problem.mirror {
        let deviation = problem.eta.mirror_deviation();
        if deviation > MIRROR_TOLERANCE {
            return Err(Error::MirrorSymmetry { deviation });
        }
    }
    Ok(SymmetryMap::new(problem.eta.n_ions(), problem.n_segments, problem.mirror, problem.time_antisymmetric))
}
