//! Phase and amplitude synthesis: closes every phase-space trajectory and
//! equalizes all pairwise couplings.

mod amplitudes;
mod model;
mod reduce;
mod solver;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

pub use amplitudes::{solve_amplitudes, AmplitudeSolution};
pub use model::{COUPLING_FLOOR, ETA_MASK_RATIO};
pub use reduce::{symmetry_reduce, SymmetryMap, MIRROR_TOLERANCE};

use model::{ConstraintLayout, Model};
use solver::{solve_local, SolverOptions};

use crate::chain::{LambDickeMatrix, NormalModeData};
use crate::error::{Error, Result};
use crate::pulse::{
    couplings, diagnose, scaled_couplings, scaled_displacements, scheme_kernels, wrap_phase, PulseScheme,
    SchemeDiagnostics,
};

fn default_true() -> bool {
    true
}
fn default_target() -> f64 {
    FRAC_PI_4
}
fn default_starts() -> usize {
    64
}
fn default_objective_tolerance() -> f64 {
    1e-6
}
fn default_constraint_tolerance() -> f64 {
    1e-8
}
fn default_outer() -> usize {
    40
}
fn default_inner() -> usize {
    400
}

/// A gate-synthesis task on a fixed chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisProblem {
    pub eta: LambDickeMatrix,
    pub modes: NormalModeData,
    /// Drive detuning `mu`, rad/s.
    pub detuning: f64,
    /// Gate time `tau`, s.
    pub gate_time: f64,
    pub n_segments: usize,
    /// Share phases and amplitudes between ions `j` and `N+1-j`.
    #[serde(default = "default_true")]
    pub mirror: bool,
    /// Impose `phi_j(tau - t) = -phi_j(t)`.
    #[serde(default = "default_true")]
    pub time_antisymmetric: bool,
    /// Target coupling angle for every pair, rad.
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_starts")]
    pub n_starts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Largest masked `sum |d|^2` accepted as closed.
    #[serde(default = "default_objective_tolerance")]
    pub objective_tolerance: f64,
    /// Largest constraint residual (infinity norm) accepted.
    #[serde(default = "default_constraint_tolerance")]
    pub constraint_tolerance: f64,
    #[serde(default = "default_outer")]
    pub max_outer_iterations: usize,
    #[serde(default = "default_inner")]
    pub max_inner_iterations: usize,
}

impl SynthesisProblem {
    /// Problem with both symmetries on, target `pi/4`, 64 starts, seed 0.
    pub fn new(eta: LambDickeMatrix, modes: NormalModeData, detuning: f64, gate_time: f64, n_segments: usize) -> Self {
        SynthesisProblem {
            eta,
            modes,
            detuning,
            gate_time,
            n_segments,
            mirror: true,
            time_antisymmetric: true,
            target: default_target(),
            n_starts: default_starts(),
            seed: 0,
            objective_tolerance: default_objective_tolerance(),
            constraint_tolerance: default_constraint_tolerance(),
            max_outer_iterations: default_outer(),
            max_inner_iterations: default_inner(),
        }
    }

    pub fn n_ions(&self) -> usize {
        self.eta.n_ions()
    }

    pub fn segment_duration(&self) -> f64 {
        self.gate_time / self.n_segments as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.eta.n_ions() == 0 {
            return bad("problem has no ions".into());
        }
        if self.eta.n_modes() != self.modes.n_modes() {
            return bad(format!("{} Lamb-Dicke columns for {} modes", self.eta.n_modes(), self.modes.n_modes()));
        }
        if self.n_segments == 0 {
            return bad("need at least one segment".into());
        }
        if !(self.gate_time.is_finite() && self.gate_time > 0.0) {
            return bad(format!("gate time must be > 0, got {}", self.gate_time));
        }
        if !self.detuning.is_finite() || self.eta.eta.iter().chain(&self.modes.frequencies).any(|v| !v.is_finite()) {
            return bad("non-finite detuning, frequency or Lamb-Dicke parameter".into());
        }
        if !(self.target.is_finite() && self.target != 0.0) {
            return bad(format!("target coupling must be finite and nonzero, got {}", self.target));
        }
        if self.n_starts == 0 {
            return bad("need at least one start".into());
        }
        if !(self.objective_tolerance > 0.0 && self.constraint_tolerance > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    /// Warning when the free phases are fewer than the `N M + N (N-1) / 2`
    /// constraints.
    pub fn feasibility_warning(&self) -> Option<String> {
        let n = self.n_ions();
        let classes = if self.mirror { n.div_ceil(2) } else { n };
        let free = self.n_segments * classes;
        let needed = n * self.modes.n_modes() + n * (n - 1) / 2;
        (free < needed).then(|| {
            format!("{free} segment phases across ion classes for {needed} constraints; synthesis may be infeasible")
        })
    }
}

/// Result of one multistart run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    pub converged: bool,
    pub objective: f64,
    pub constraint_norm: f64,
    /// `max_j |Omega_j| tau_s` after the amplitude solve, when it succeeded.
    pub max_scaled_amplitude: Option<f64>,
    pub iterations: usize,
    /// Why a start that met the tolerances was still rejected.
    pub rejection: Option<String>,
}

/// A synthesized scheme with recomputed residuals and the multistart record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub scheme: PulseScheme,
    /// Masked `sum |d_{j,m}|^2`, recomputed from the final scheme.
    pub objective: f64,
    /// Coupling-compatibility residuals, recomputed from the final scheme.
    pub constraint_residuals: Vec<f64>,
    /// `max |theta_{j,j'} - target| / |target|`.
    pub max_theta_deviation: f64,
    pub seed: u64,
    pub n_vars: usize,
    pub n_converged: usize,
    /// Every start, converged ones first, best first.
    pub outcomes: Vec<StartOutcome>,
    pub warnings: Vec<String>,
}

/// `(sum |d|^2, gradient)` at reduced phases `vars`, over entries with
/// nonzero Lamb-Dicke parameter.
pub fn objective_and_gradient(vars: &[f64], problem: &SynthesisProblem) -> Result<(f64, Vec<f64>)> {
    let model = Model::new(problem)?;
    check_len(vars, &model)?;
    let ev = model.evaluate(vars, true);
    Ok((ev.objective(), ev.gradient().iter().copied().collect()))
}

/// Coupling-compatibility residuals and sign feasibility at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstraints {
    /// Zero exactly when some amplitudes make every pairwise coupling equal
    /// in magnitude.
    pub residuals: Vec<f64>,
    /// Whether amplitude signs exist that make every coupling the sign of
    /// the target.
    pub sign_feasible: bool,
}

/// Coupling constraints at reduced phases `vars`. Vanishing couplings are
/// clamped at [`COUPLING_FLOOR`] rather than rejected.
pub fn coupling_constraints(vars: &[f64], problem: &SynthesisProblem) -> Result<CouplingConstraints> {
    let model = Model::new(problem)?;
    check_len(vars, &model)?;
    let residuals = model.evaluate(vars, false).c.iter().copied().collect();
    let scheme = unit_scheme(problem, model.map.expand(vars))?;
    let g = scaled_couplings(&scheme_kernels(&problem.eta, &problem.modes, &scheme)?, &scheme.phases);
    let sign_feasible = amplitudes::two_color(problem.n_ions(), |j, jp| (g[(j, jp)] * problem.target).signum()).is_ok();
    Ok(CouplingConstraints { residuals, sign_feasible })
}

fn check_len(vars: &[f64], model: &Model) -> Result<()> {
    if vars.len() != model.n_vars() {
        return Err(Error::InvalidInput(format!("{} reduced phases given, problem has {}", vars.len(), model.n_vars())));
    }
    Ok(())
}

struct StartRun {
    outcome: StartOutcome,
    vars: Vec<f64>,
    amplitudes: Option<Vec<f64>>,
}

fn unit_scheme(problem: &SynthesisProblem, phases: DMatrix<f64>) -> Result<PulseScheme> {
    PulseScheme::new(problem.detuning, problem.gate_time, phases, vec![1.0; problem.n_ions()])
}

fn run_start(model: &Model, problem: &SynthesisProblem, opts: &SolverOptions, start: usize) -> Result<StartRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    rng.set_stream(start as u64);
    let x0: Vec<f64> = (0..model.n_vars()).map(|_| wrap_phase(rng.random_range(-PI..PI))).collect();
    let n_classes = model.map.classes.len();
    let pattern = start % (1usize << (n_classes - 1).min(20));
    let class_signs: Vec<f64> =
        (0..n_classes).map(|c| if c > 0 && pattern >> (c - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect();
    let local = solve_local(model, &class_signs, problem.target, x0, opts);
    let vars: Vec<f64> = local.vars.iter().map(|&v| wrap_phase(v)).collect();
    let ev = model.evaluate(&vars, false);
    let objective = ev.objective();
    let constraint_norm = if ev.c.is_empty() { 0.0 } else { ev.constraint_norm() };
    let mut outcome = StartOutcome {
        start,
        converged: false,
        objective,
        constraint_norm,
        max_scaled_amplitude: None,
        iterations: local.iterations,
        rejection: None,
    };
    let mut amplitudes = None;
    if objective < problem.objective_tolerance && constraint_norm < problem.constraint_tolerance {
        let scheme = unit_scheme(problem, model.map.expand(&vars))?;
        let g = scaled_couplings(&scheme_kernels(&problem.eta, &problem.modes, &scheme)?, &scheme.phases);
        match solve_amplitudes(&g, problem.target) {
            Ok(mut sol) => {
                if problem.mirror {
                    let amps = &mut sol.scaled_amplitudes;
                    for j in 0..n_classes {
                        let avg = 0.5 * (amps[j] + amps[amps.len() - 1 - j]);
                        let last = amps.len() - 1 - j;
                        amps[j] = avg;
                        amps[last] = avg;
                    }
                }
                outcome.converged = true;
                outcome.max_scaled_amplitude = Some(sol.scaled_amplitudes.iter().fold(0.0, |a, x| a.max(x.abs())));
                amplitudes = Some(sol.scaled_amplitudes);
            }
            Err(e) => outcome.rejection = Some(e.to_string()),
        }
    }
    Ok(StartRun { outcome, vars, amplitudes })
}

/// Converged starts first, ordered by peak amplitude, objective, start index;
/// the rest by `objective + constraint_norm`, then start index.
fn rank(a: &StartOutcome, b: &StartOutcome) -> std::cmp::Ordering {
    b.converged.cmp(&a.converged).then_with(|| {
        if a.converged {
            let (pa, pb) = (a.max_scaled_amplitude.unwrap_or(f64::INFINITY), b.max_scaled_amplitude.unwrap_or(f64::INFINITY));
            pa.total_cmp(&pb).then(a.objective.total_cmp(&b.objective))
        } else {
            (a.objective + a.constraint_norm).total_cmp(&(b.objective + b.constraint_norm))
        }
        .then(a.start.cmp(&b.start))
    })
}

fn masked_objective(d: &DMatrix<C64>, mask: &[(usize, usize)]) -> f64 {
    mask.iter().map(|&(j, m)| d[(j, m)].norm_sqr()).sum()
}

/// Multistart search for phases, followed by the amplitude solve. The
/// returned residuals are recomputed from the final scheme.
pub fn solve_phases(problem: &SynthesisProblem) -> Result<SynthesisResult> {
    let model = Model::new(problem)?;
    let n = problem.n_ions();
    let mut warnings = Vec::new();
    if let Some(w) = problem.feasibility_warning() {
        log::warn!("{w}");
        warnings.push(w);
    }
    if n == 1 {
        let w = "single ion: nothing to entangle, returning a zero-amplitude scheme".to_string();
        log::warn!("{w}");
        warnings.push(w);
        let scheme = PulseScheme::new(problem.detuning, problem.gate_time, DMatrix::zeros(1, problem.n_segments), vec![0.0])?;
        let k = scheme_kernels(&problem.eta, &problem.modes, &scheme)?;
        return Ok(SynthesisResult {
            objective: masked_objective(&scaled_displacements(&k, &scheme.phases), &model.mask),
            scheme,
            constraint_residuals: Vec::new(),
            max_theta_deviation: 0.0,
            seed: problem.seed,
            n_vars: model.n_vars(),
            n_converged: 0,
            outcomes: Vec::new(),
            warnings,
        });
    }

    let opts = SolverOptions {
        max_outer: problem.max_outer_iterations,
        max_inner: problem.max_inner_iterations,
        objective_tolerance: problem.objective_tolerance,
        constraint_tolerance: problem.constraint_tolerance,
    };
    let mut runs: Vec<StartRun> =
        (0..problem.n_starts).into_par_iter().map(|s| run_start(&model, problem, &opts, s)).collect::<Result<_>>()?;
    runs.sort_by(|a, b| rank(&a.outcome, &b.outcome));
    let n_converged = runs.iter().filter(|r| r.outcome.converged).count();
    log::info!("{n_converged} of {} starts converged", problem.n_starts);

    let best = &runs[0];
    let Some(amps) = best.amplitudes.clone().filter(|_| best.outcome.converged) else {
        let phases = model.map.expand(&best.vars);
        return Err(Error::NoConvergence {
            objective: best.outcome.objective,
            constraint: best.outcome.constraint_norm,
            best_phases: (0..n).map(|j| phases.row(j).iter().copied().collect()).collect(),
        });
    };

    let ts = problem.segment_duration();
    let scheme = PulseScheme::new(
        problem.detuning,
        problem.gate_time,
        model.map.expand(&best.vars),
        amps.iter().map(|a| a / ts).collect(),
    )?;
    let kernels = scheme_kernels(&problem.eta, &problem.modes, &scheme)?;
    let d = scaled_displacements(&kernels, &scheme.phases);
    let g = scaled_couplings(&kernels, &scheme.phases);
    let theta = couplings(&g, &scheme);
    let mut max_theta_deviation: f64 = 0.0;
    for j in 0..n {
        for jp in (j + 1)..n {
            max_theta_deviation = max_theta_deviation.max((theta[(j, jp)] - problem.target).abs() / problem.target.abs());
        }
    }
    Ok(SynthesisResult {
        objective: masked_objective(&d, &model.mask),
        constraint_residuals: model.layout.residuals(&g),
        max_theta_deviation,
        scheme,
        seed: problem.seed,
        n_vars: model.n_vars(),
        n_converged,
        outcomes: runs.into_iter().map(|r| r.outcome).collect(),
        warnings,
    })
}

/// Full pipeline: phases, amplitudes, then an independent diagnosis of the
/// final scheme.
pub fn synthesize(problem: &SynthesisProblem, samples_per_segment: usize) -> Result<(SynthesisResult, SchemeDiagnostics)> {
    let result = solve_phases(problem)?;
    let diagnostics = diagnose(&problem.eta, &problem.modes, &result.scheme, samples_per_segment)?;
    Ok((result, diagnostics))
}

/// Constraint residuals of an arbitrary coupling matrix under the layout
/// used for `n` ions.
pub fn compatibility_residuals(g: &DMatrix<f64>, mirror: bool) -> Vec<f64> {
    ConstraintLayout::new(g.nrows(), mirror).residuals(g)
}
