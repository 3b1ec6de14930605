use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Signed peak amplitudes that turn scaled couplings into the target angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSolution {
    /// `Omega_j * tau_s`, signed.
    pub scaled_amplitudes: Vec<f64>,
    /// `max |Omega_j Omega_j' g_{j,j'} - target| / |target|` over pairs.
    pub max_deviation: f64,
}

/// Solves `Omega_j Omega_j' g_{j,j'} = target` for every pair.
///
/// Magnitudes come from the minimum-norm least-squares solution of
/// `l_j + l_j' = ln(|target| / |g_{j,j'}|)`; signs from a 2-coloring of the
/// required sign pattern. The ion with the largest magnitude (lowest index on
/// ties) is made positive.
pub fn solve_amplitudes(g: &DMatrix<f64>, target: f64) -> Result<AmplitudeSolution> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::InvalidInput(format!("coupling matrix is {}x{}", n, g.ncols())));
    }
    if n < 2 {
        return Err(Error::InvalidInput("amplitude solve needs at least two ions".into()));
    }
    if !(target.is_finite() && target != 0.0) {
        return Err(Error::InvalidInput(format!("target coupling must be finite and nonzero, got {target}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| ((j + 1)..n).map(move |jp| (j, jp))).collect();
    for &(j, jp) in &pairs {
        let v = g[(j, jp)];
        if !(v.is_finite() && v != 0.0) {
            return Err(Error::InvalidInput(format!("coupling g[{},{}] = {v} cannot be scaled to the target", j + 1, jp + 1)));
        }
    }

    let a = DMatrix::from_fn(pairs.len(), n, |p, i| if pairs[p].0 == i || pairs[p].1 == i { 1.0 } else { 0.0 });
    let b = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(j, jp)| (target.abs() / g[(j, jp)].abs()).ln()));
    let logs = a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let signs = two_color(n, |j, jp| (g[(j, jp)] * target).signum())?;
    let mut amps: Vec<f64> = (0..n).map(|j| signs[j] * logs[j].exp()).collect();
    let lead = (0..n).fold(0, |best, j| if amps[j].abs() > amps[best].abs() * (1.0 + 1e-12) { j } else { best });
    if amps[lead] < 0.0 {
        amps.iter_mut().for_each(|x| *x = -*x);
    }

    let max_deviation = pairs
        .iter()
        .map(|&(j, jp)| (amps[j] * amps[jp] * g[(j, jp)] - target).abs() / target.abs())
        .fold(0.0, f64::max);
    Ok(AmplitudeSolution { scaled_amplitudes: amps, max_deviation })
}

/// Assigns `s_j = +-1` with `s_j s_j' = relation(j, j')` on the complete
/// graph, or returns an odd cycle of conflicting relations.
pub(crate) fn two_color(n: usize, relation: impl Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let rel = |a: usize, b: usize| if a < b { relation(a, b) } else { relation(b, a) };
    let mut sign = vec![0.0; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    sign[0] = 1.0;
    queue.push_back(0);
    while let Some(a) = queue.pop_front() {
        for b in 0..n {
            if b == a {
                continue;
            }
            let want = sign[a] * rel(a, b);
            if sign[b] == 0.0 {
                sign[b] = want;
                parent[b] = a;
                queue.push_back(b);
            } else if sign[b] != want {
                return Err(Error::SignPattern { cycle: odd_cycle(&parent, a, b) });
            }
        }
    }
    Ok(sign)
}

fn odd_cycle(parent: &[usize], a: usize, b: usize) -> Vec<usize> {
    let path = |mut x: usize| {
        let mut p = vec![x];
        while parent[x] != usize::MAX {
            x = parent[x];
            p.push(x);
        }
        p
    };
    let pa = path(a);
    let pb = path(b);
    let meet = *pa.iter().find(|x| pb.contains(x)).expect("common root");
    let mut cycle: Vec<usize> = pa.iter().copied().take_while(|&x| x != meet).collect();
    cycle.push(meet);
    let tail: Vec<usize> = pb.iter().copied().take_while(|&x| x != meet).collect();
    cycle.extend(tail.into_iter().rev());
    cycle
}
