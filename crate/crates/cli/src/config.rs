//! JSON run configuration. Frequencies are ordinary frequencies in MHz and
//! times are in microseconds; the `2 pi` and unit scaling are applied when the
//! configuration is turned into library inputs.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use iongate::chain::{fit_trap_frequencies, TrapConfig};
use iongate::constants::mhz;
use iongate::optimize::SynthesisProblem;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainSection,
    #[serde(default)]
    pub scheme: Option<SchemeSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either a measured transverse spectrum (fitted) or explicit trap
/// frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    /// Ions in the chain. When a measured spectrum of a different length is
    /// given, the trap fitted to it is reused for this many ions.
    pub n_ions: usize,
    /// Measured transverse mode frequencies, MHz, highest first.
    #[serde(default)]
    pub measured_modes_mhz: Option<Vec<f64>>,
    #[serde(default)]
    pub axial_mhz: Option<f64>,
    #[serde(default)]
    pub transverse_mhz: Option<f64>,
    /// Largest acceptable RMS fit residual, kHz.
    #[serde(default = "default_fit_tolerance")]
    pub fit_tolerance_khz: f64,
    /// Raman wavelength, nm.
    #[serde(default)]
    pub wavelength_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// Bichromatic detuning `mu / 2 pi`, MHz.
    pub detuning_mhz: f64,
    pub gate_time_us: f64,
    pub n_segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_objective_tolerance")]
    pub objective_tolerance: f64,
    #[serde(default = "default_constraint_tolerance")]
    pub constraint_tolerance: f64,
    #[serde(default = "default_true")]
    pub mirror: bool,
    #[serde(default = "default_true")]
    pub time_antisymmetric: bool,
    /// Target coupling, rad.
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default)]
    pub max_outer_iterations: Option<usize>,
    #[serde(default)]
    pub max_inner_iterations: Option<usize>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            seed: 0,
            starts: default_starts(),
            objective_tolerance: default_objective_tolerance(),
            constraint_tolerance: default_constraint_tolerance(),
            mirror: true,
            time_antisymmetric: true,
            target: default_target(),
            max_outer_iterations: None,
            max_inner_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Which ions are driven; all when absent.
    #[serde(default)]
    pub mask: Option<Vec<bool>>,
    /// Mean thermal phonon number, one value for every mode or one per mode.
    #[serde(default)]
    pub mean_occupation: Occupation,
    #[serde(default)]
    pub parity_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Occupation {
    Uniform(f64),
    PerMode(Vec<f64>),
}

impl Default for Occupation {
    fn default() -> Self {
        Occupation::Uniform(0.0)
    }
}

impl Occupation {
    pub fn per_mode(&self, n_modes: usize) -> Result<Vec<f64>, CliError> {
        match self {
            Occupation::Uniform(v) => Ok(vec![*v; n_modes]),
            Occupation::PerMode(v) if v.len() == n_modes => Ok(v.clone()),
            Occupation::PerMode(v) => Err(CliError::Input(format!("{} mean occupations for {n_modes} modes", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_samples")]
    pub samples_per_segment: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: None, formats: default_formats(), samples_per_segment: default_samples() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn default_fit_tolerance() -> f64 {
    5.0
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
fn default_true() -> bool {
    true
}
fn default_target() -> f64 {
    FRAC_PI_4
}
fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}
fn default_samples() -> usize {
    16
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.chain;
        if c.n_ions == 0 {
            return Err(CliError::Input("chain.n_ions must be at least 1".into()));
        }
        let trap = c.axial_mhz.is_some() || c.transverse_mhz.is_some();
        match (&c.measured_modes_mhz, trap) {
            (Some(_), true) => {
                return Err(CliError::Input("give either chain.measured_modes_mhz or trap frequencies, not both".into()))
            }
            (None, false) => return Err(CliError::Input("chain needs measured_modes_mhz or axial_mhz + transverse_mhz".into())),
            (None, true) if c.axial_mhz.is_none() || c.transverse_mhz.is_none() => {
                return Err(CliError::Input("chain needs both axial_mhz and transverse_mhz".into()))
            }
            (Some(m), false) if m.is_empty() => return Err(CliError::Input("chain.measured_modes_mhz is empty".into())),
            _ => {}
        }
        if let (Some(mask), n) = (&self.simulate.mask, c.n_ions) {
            if mask.len() != n {
                return Err(CliError::Input(format!("simulate.mask has {} entries for {n} ions", mask.len())));
            }
        }
        if self.output.samples_per_segment == 0 {
            return Err(CliError::Input("output.samples_per_segment must be at least 1".into()));
        }
        Ok(())
    }

    /// Trap configuration and, when fitted, the RMS fit residual (rad/s).
    pub fn trap(&self) -> Result<(TrapConfig, Option<f64>), CliError> {
        let c = &self.chain;
        let with_wavelength = |mut t: TrapConfig| {
            if let Some(nm) = c.wavelength_nm {
                t.raman_wavelength = nm * 1e-9;
            }
            t
        };
        match &c.measured_modes_mhz {
            Some(measured) => {
                let nu: Vec<f64> = measured.iter().map(|&f| mhz(f)).collect();
                let template = with_wavelength(TrapConfig::new(nu.len(), mhz(0.5), nu[0]));
                let fit = fit_trap_frequencies(&nu, &template, mhz(c.fit_tolerance_khz * 1e-3))?;
                Ok((TrapConfig { n_ions: c.n_ions, ..fit.config }, Some(fit.rms_residual)))
            }
            None => {
                let t = TrapConfig::new(c.n_ions, mhz(c.axial_mhz.unwrap_or(0.0)), mhz(c.transverse_mhz.unwrap_or(0.0)));
                let t = with_wavelength(t);
                t.validate()?;
                Ok((t, None))
            }
        }
    }

    pub fn scheme_section(&self) -> Result<&SchemeSection, CliError> {
        self.scheme.as_ref().ok_or_else(|| CliError::Input("config has no scheme section".into()))
    }

    pub fn problem(&self, eta: iongate::chain::LambDickeMatrix, modes: iongate::chain::NormalModeData) -> Result<SynthesisProblem, CliError> {
        let s = self.scheme_section()?;
        let o = &self.optimizer;
        let mut p = SynthesisProblem::new(eta, modes, mhz(s.detuning_mhz), s.gate_time_us * 1e-6, s.n_segments);
        p.seed = o.seed;
        p.n_starts = o.starts;
        p.objective_tolerance = o.objective_tolerance;
        p.constraint_tolerance = o.constraint_tolerance;
        p.mirror = o.mirror;
        p.time_antisymmetric = o.time_antisymmetric;
        p.target = o.target;
        if let Some(v) = o.max_outer_iterations {
            p.max_outer_iterations = v;
        }
        if let Some(v) = o.max_inner_iterations {
            p.max_inner_iterations = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}
