use serde::Serialize;
use std::path::Path;

use iongate::chain::{lamb_dicke_parameters, transverse_normal_modes, LambDickeMatrix, NormalModeData, TrapConfig};
use iongate::constants::ordinary;
use iongate::optimize::synthesize as run_synthesis;
use iongate::pulse::{diagnose, PulseScheme, SchemeDiagnostics, SchemeFile};
use iongate::sim::{default_parity_points, prepare_ghz, restrict_register, MotionalInit, ResidualDisplacementSet};
use iongate::Error;
use nalgebra::DMatrix;

use crate::config::RunConfig;
use crate::output::{read_text, OutputDir};
use crate::CliError;

struct Chain {
    trap: TrapConfig,
    fit_rms: Option<f64>,
    modes: NormalModeData,
    eta: LambDickeMatrix,
}

fn build_chain(cfg: &RunConfig) -> Result<Chain, CliError> {
    let (trap, fit_rms) = cfg.trap()?;
    let modes = transverse_normal_modes(&trap)?;
    let eta = lamb_dicke_parameters(&modes, &trap)?;
    Ok(Chain { trap, fit_rms, modes, eta })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|j| m.row(j).iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct ModesReport {
    n_ions: usize,
    axial_mhz: f64,
    transverse_mhz: f64,
    fit_rms_residual_khz: Option<f64>,
    frequencies_mhz: Vec<f64>,
    /// `[ion][mode]`.
    participation: Vec<Vec<f64>>,
    /// `[ion][mode]`.
    lamb_dicke: Vec<Vec<f64>>,
}

pub fn modes(cfg: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let c = build_chain(cfg)?;
    let freqs: Vec<f64> = c.modes.frequencies.iter().map(|&w| ordinary(w) * 1e-6).collect();
    let report = ModesReport {
        n_ions: c.trap.n_ions,
        axial_mhz: ordinary(c.trap.axial_freq) * 1e-6,
        transverse_mhz: ordinary(c.trap.transverse_freq) * 1e-6,
        fit_rms_residual_khz: c.fit_rms.map(|r| ordinary(r) * 1e-3),
        frequencies_mhz: freqs.clone(),
        participation: rows(&c.modes.participation),
        lamb_dicke: rows(&c.eta.eta),
    };
    out.write_json("modes.json", &report)?;
    let n = c.trap.n_ions;
    let csv_rows = (0..freqs.len()).flat_map(|m| {
        let (f, b, e) = (freqs[m], &c.modes.participation, &c.eta.eta);
        (0..n).map(move |j| vec![(m + 1).to_string(), (j + 1).to_string(), f.to_string(), b[(j, m)].to_string(), e[(j, m)].to_string()])
    });
    out.write_csv("modes.csv", &["mode", "ion", "frequency_mhz", "participation", "lamb_dicke"], csv_rows)?;

    println!(
        "trap: axial {:.6} MHz, transverse {:.6} MHz",
        report.axial_mhz, report.transverse_mhz
    );
    if let Some(r) = report.fit_rms_residual_khz {
        println!("fit rms residual: {r:.4} kHz");
    }
    for (m, f) in freqs.iter().enumerate() {
        println!("mode {}: {f:.6} MHz", m + 1);
    }
    Ok(())
}

fn write_diagnostics(out: &OutputDir, diag: &SchemeDiagnostics, scheme: &PulseScheme) -> Result<(), CliError> {
    out.write_json("diagnostics.json", &diag.report(scheme))?;
    let tr = &diag.trajectories;
    let (n, n_modes) = (diag.alpha.nrows(), diag.alpha.ncols());
    let traj = tr.times.iter().zip(&tr.alpha).flat_map(|(t, a)| {
        (0..n).flat_map(move |j| {
            (0..n_modes).map(move |m| {
                let z = a[(j, m)];
                vec![t.to_string(), (j + 1).to_string(), (m + 1).to_string(), z.re.to_string(), z.im.to_string()]
            })
        })
    });
    out.write_csv("trajectories.csv", &["t", "j", "m", "re_alpha", "im_alpha"], traj)?;
    let coup = tr.times.iter().zip(&tr.theta).flat_map(|(t, th)| {
        (0..n).flat_map(move |j| {
            ((j + 1)..n).map(move |jp| vec![t.to_string(), (j + 1).to_string(), (jp + 1).to_string(), th[(j, jp)].to_string()])
        })
    });
    out.write_csv("couplings.csv", &["t", "j", "jp", "theta"], coup)
}

fn print_diagnostics(diag: &SchemeDiagnostics, scheme: &PulseScheme, target: f64) {
    println!("max |alpha(tau)|: {:.3e}", diag.max_alpha());
    match diag.max_theta_deviation(scheme, target) {
        Some(d) => println!("max theta deviation from target: {d:.3e} (relative)"),
        None => println!("max theta deviation from target: n/a (fewer than two driven ions)"),
    }
    let n = diag.theta.nrows();
    for j in 0..n {
        for jp in (j + 1)..n {
            println!("theta[{},{}] = {:.9} rad", j + 1, jp + 1, diag.theta[(j, jp)]);
        }
    }
}

#[derive(Serialize)]
struct BestIterate<'a> {
    objective: f64,
    constraint: f64,
    /// `[ion][segment]`, rad.
    best_phases: &'a [Vec<f64>],
}

pub fn synthesize(cfg: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let c = build_chain(cfg)?;
    let problem = cfg.problem(c.eta, c.modes)?;
    if let Some(w) = problem.feasibility_warning() {
        log::warn!("{w}");
    }
    let (result, diag) = match run_synthesis(&problem, cfg.output.samples_per_segment) {
        Ok(r) => r,
        Err(e @ Error::NoConvergence { .. }) => {
            if let Error::NoConvergence { objective, constraint, best_phases } = &e {
                let dump = BestIterate { objective: *objective, constraint: *constraint, best_phases };
                let path = out.write_json_always("best_iterate.json", &dump)?;
                eprintln!("best iterate written to {}", path.display());
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let s = cfg.scheme_section()?;
    let comment = format!(
        "{} ions, mu = 2 pi x {} MHz, tau = {} us, K = {}, seed {}",
        problem.n_ions(),
        s.detuning_mhz,
        s.gate_time_us,
        s.n_segments,
        problem.seed
    );
    let scheme_path = out.write_json_always("scheme.json", &result.scheme.to_file(comment))?;
    out.write_json("synthesis.json", &result)?;
    write_diagnostics(out, &diag, &result.scheme)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }

    println!("scheme: {}", scheme_path.display());
    println!("converged starts: {}/{}", result.n_converged, problem.n_starts);
    println!("objective sum |d|^2: {:.3e}", result.objective);
    let worst = result.constraint_residuals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("coupling constraint residual: {worst:.3e}");
    let amps: Vec<String> = result.scheme.peak_amplitudes.iter().map(|&a| format!("{:.6}", ordinary(a) * 1e-6)).collect();
    println!("peak amplitudes (MHz): [{}]", amps.join(", "));
    print_diagnostics(&diag, &result.scheme, problem.target);
    Ok(())
}

fn load_scheme(path: &Path) -> Result<PulseScheme, CliError> {
    Ok(SchemeFile::from_json(&read_text(path)?)?.to_scheme()?)
}

fn check_ions(scheme: &PulseScheme, chain: &Chain) -> Result<(), CliError> {
    if scheme.n_ions() != chain.trap.n_ions {
        return Err(CliError::Input(format!(
            "scheme drives {} ions but the configured chain has {}",
            scheme.n_ions(),
            chain.trap.n_ions
        )));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, scheme_path: &Path, out: &OutputDir) -> Result<(), CliError> {
    let scheme = load_scheme(scheme_path)?;
    let c = build_chain(cfg)?;
    check_ions(&scheme, &c)?;
    let diag = diagnose(&c.eta, &c.modes, &scheme, cfg.output.samples_per_segment)?;
    write_diagnostics(out, &diag, &scheme)?;
    print_diagnostics(&diag, &scheme, cfg.optimizer.target);
    Ok(())
}

pub fn simulate(cfg: &RunConfig, scheme_path: &Path, mask: Option<Vec<bool>>, out: &OutputDir) -> Result<(), CliError> {
    let scheme = load_scheme(scheme_path)?;
    let c = build_chain(cfg)?;
    check_ions(&scheme, &c)?;
    let n = scheme.n_ions();
    let mask = mask.or_else(|| cfg.simulate.mask.clone()).unwrap_or_else(|| vec![true; n]);
    if mask.len() != n {
        return Err(CliError::Input(format!("mask has {} entries for {n} ions", mask.len())));
    }
    let subset: Vec<usize> = (0..n).filter(|&j| mask[j]).collect();
    if subset.is_empty() {
        return Err(CliError::Input("mask drives no ions".into()));
    }

    let masked = scheme.masked(&subset)?;
    let diag = diagnose(&c.eta, &c.modes, &masked, 1)?;
    let residuals = ResidualDisplacementSet { alpha: diag.alpha.clone() };
    let (theta, residuals) = restrict_register(&diag.theta, &residuals, &subset)?;
    let nbar = cfg.simulate.mean_occupation.per_mode(c.modes.n_modes())?;
    let motion = if nbar.iter().all(|&v| v == 0.0) { MotionalInit::ground(nbar.len()) } else { MotionalInit::thermal(nbar)? };
    let points = cfg.simulate.parity_points.unwrap_or_else(|| default_parity_points(subset.len()));
    let result = prepare_ghz(&theta, &residuals, &motion, points)?;

    out.write_json("gate_result.json", &result)?;
    out.write_csv(
        "parity.csv",
        &["phi", "parity"],
        result.parity.samples.iter().map(|(phi, p)| vec![phi.to_string(), p.to_string()]),
    )?;
    let k = result.n_qubits;
    out.write_csv(
        "populations.csv",
        &["state", "population"],
        result.populations.iter().enumerate().map(|(i, p)| vec![format!("{i:0k$b}"), p.to_string()]),
    )?;

    let ions: Vec<String> = subset.iter().map(|j| (j + 1).to_string()).collect();
    println!("driven ions: {{{}}}", ions.join(", "));
    println!("P(0...0) + P(1...1): {:.9}", result.populations[0] + result.populations[result.populations.len() - 1]);
    println!("parity contrast: {:.9}", result.parity_contrast);
    println!("fidelity: {:.9}", result.fidelity);
    for w in &result.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
