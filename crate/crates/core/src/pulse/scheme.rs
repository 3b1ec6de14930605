use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{angular, ordinary};
use crate::error::{Error, Result};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let x = phi.rem_euclid(2.0 * PI);
    if x > PI {
        x - 2.0 * PI
    } else {
        x
    }
}

/// A segmented, phase-modulated bichromatic drive on every ion.
///
/// Ion `j` sees Rabi frequency `peak_amplitudes[j] * w(t)` with phase
/// `phases[(j, k)]` during segment `k`. Amplitudes are signed. Serializes as
/// a [`SchemeFile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SchemeFile", try_from = "SchemeFile")]
pub struct PulseScheme {
    /// Detuning `mu` from the carrier, rad/s.
    pub detuning: f64,
    /// Total gate time, s.
    pub gate_time: f64,
    /// Phases indexed `[(ion, segment)]`, rad, in `(-pi, pi]`.
    pub phases: DMatrix<f64>,
    /// Signed peak Rabi frequencies, rad/s.
    pub peak_amplitudes: Vec<f64>,
}

impl PulseScheme {
    pub fn new(detuning: f64, gate_time: f64, phases: DMatrix<f64>, peak_amplitudes: Vec<f64>) -> Result<Self> {
        let scheme = PulseScheme { detuning, gate_time, phases: phases.map(wrap_phase), peak_amplitudes };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gate_time.is_finite() && self.gate_time > 0.0) {
            return Err(Error::InvalidInput(format!("gate time must be > 0, got {}", self.gate_time)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidInput("detuning must be finite".into()));
        }
        if self.phases.ncols() == 0 || self.phases.nrows() == 0 {
            return Err(Error::InvalidInput("scheme needs at least one ion and one segment".into()));
        }
        if self.peak_amplitudes.len() != self.phases.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for {} ions",
                self.peak_amplitudes.len(),
                self.phases.nrows()
            )));
        }
        if self.phases.iter().chain(&self.peak_amplitudes).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase or amplitude".into()));
        }
        Ok(())
    }

    pub fn n_ions(&self) -> usize {
        self.phases.nrows()
    }

    pub fn n_segments(&self) -> usize {
        self.phases.ncols()
    }

    /// Segment duration `tau_s = tau / K`, s.
    pub fn segment_duration(&self) -> f64 {
        self.gate_time / self.n_segments() as f64
    }

    /// Peak amplitudes in units of `1 / tau_s`, the scale used by the kernels.
    pub fn scaled_amplitudes(&self) -> Vec<f64> {
        let ts = self.segment_duration();
        self.peak_amplitudes.iter().map(|o| o * ts).collect()
    }

    /// Copy with the amplitudes of ions outside `subset` set to zero.
    pub fn masked(&self, subset: &[usize]) -> Result<PulseScheme> {
        if let Some(&bad) = subset.iter().find(|&&j| j >= self.n_ions()) {
            return Err(Error::InvalidInput(format!("ion index {bad} out of range")));
        }
        let mut out = self.clone();
        for (j, amp) in out.peak_amplitudes.iter_mut().enumerate() {
            if !subset.contains(&j) {
                *amp = 0.0;
            }
        }
        Ok(out)
    }

    pub fn to_file(&self, comment: impl Into<String>) -> SchemeFile {
        let phases_pi = (0..self.n_ions())
            .map(|j| self.phases.row(j).iter().map(|p| p / PI).collect())
            .collect();
        SchemeFile {
            detuning_hz: ordinary(self.detuning),
            gate_time_s: self.gate_time,
            n_segments: self.n_segments(),
            phases_pi,
            peak_amplitudes_hz: self.peak_amplitudes.iter().map(|&o| ordinary(o)).collect(),
            comment: comment.into(),
        }
    }
}

impl From<PulseScheme> for SchemeFile {
    fn from(s: PulseScheme) -> Self {
        s.to_file("")
    }
}

impl TryFrom<SchemeFile> for PulseScheme {
    type Error = Error;

    fn try_from(f: SchemeFile) -> Result<Self> {
        f.to_scheme()
    }
}

/// On-disk JSON form of a [`PulseScheme`]. Frequencies are ordinary (Hz,
/// the `2 pi` is applied on ingest), phases in units of `pi`, one row per ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub detuning_hz: f64,
    pub gate_time_s: f64,
    pub n_segments: usize,
    pub phases_pi: Vec<Vec<f64>>,
    pub peak_amplitudes_hz: Vec<f64>,
    #[serde(default)]
    pub comment: String,
}

impl SchemeFile {
    pub fn to_scheme(&self) -> Result<PulseScheme> {
        let n = self.phases_pi.len();
        if n == 0 {
            return Err(Error::InvalidInput("phases_pi is empty".into()));
        }
        if let Some((j, row)) = self.phases_pi.iter().enumerate().find(|(_, r)| r.len() != self.n_segments) {
            return Err(Error::InvalidInput(format!(
                "ion {} has {} phases, expected n_segments = {}",
                j + 1,
                row.len(),
                self.n_segments
            )));
        }
        let phases = DMatrix::from_fn(n, self.n_segments, |j, k| self.phases_pi[j][k] * PI);
        PulseScheme::new(
            angular(self.detuning_hz),
            self.gate_time_s,
            phases,
            self.peak_amplitudes_hz.iter().map(|&f| angular(f)).collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<SchemeFile> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed scheme JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme serialises")
    }
}
