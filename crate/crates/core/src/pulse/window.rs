//! The sin^2 amplitude-shaping window.
//!
//! `w` rises as `sin^2(pi t / (2 tau_s))` over the first segment, holds at 1,
//! and falls as `sin^2(pi (t - tau) / (2 tau_s))` over the last segment. With
//! a single segment the two ramps meet at `tau / 2`, where `w = 1/2`.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use super::integrals::{ExpTerm, WindowPiece};
use crate::error::{Error, Result};

/// Window value at time `t` for gate time `tau` and segment duration `tau_s`.
pub fn window_value(t: f64, tau: f64, tau_s: f64) -> Result<f64> {
    if !(tau > 0.0 && tau_s > 0.0 && tau_s <= tau) {
        return Err(Error::InvalidInput(format!("bad window durations tau={tau}, tau_s={tau_s}")));
    }
    if !(0.0..=tau).contains(&t) {
        return Err(Error::Domain { t, tau });
    }
    let rise = |x: f64| (PI / (2.0 * tau_s) * x).sin().powi(2);
    let v = if t <= tau_s && t <= tau - t {
        rise(t)
    } else if t >= tau - tau_s {
        rise(t - tau)
    } else {
        1.0
    };
    Ok(v)
}

/// Same shape as [`window_value`], parametrised on the pieces used for the
/// closed-form integrals, in segment time units (`tau_s = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingWindow {
    pub n_segments: usize,
}

impl ShapingWindow {
    pub fn new(n_segments: usize) -> Self {
        ShapingWindow { n_segments }
    }

    /// Window value at scaled time `s` in `[0, K]`.
    pub fn value(&self, s: f64) -> f64 {
        let k = self.n_segments as f64;
        let rise = |x: f64| (PI / 2.0 * x).sin().powi(2);
        if s <= 1.0 && s <= k - s {
            rise(s)
        } else if s >= k - 1.0 {
            rise(s - k)
        } else {
            1.0
        }
    }

    fn ramp(start: f64, end: f64, shift: f64) -> WindowPiece {
        // sin^2(pi (s - shift) / 2) = 1/2 - (e^{i pi (s - shift)} + c.c.) / 4
        let phase = C64::from_polar(0.25, -PI * shift);
        WindowPiece {
            start,
            end,
            terms: vec![
                ExpTerm { coef: C64::new(0.5, 0.0), freq: 0.0 },
                ExpTerm { coef: -phase, freq: PI },
                ExpTerm { coef: -phase.conj(), freq: -PI },
            ],
        }
    }

    /// Smooth pieces making up segment `k` (0-based).
    pub(crate) fn segment_pieces(&self, k: usize) -> Vec<WindowPiece> {
        let kk = self.n_segments;
        let start = k as f64;
        let end = start + 1.0;
        let last = kk as f64;
        if kk == 1 {
            return vec![Self::ramp(0.0, 0.5, 0.0), Self::ramp(0.5, 1.0, 1.0)];
        }
        if k == 0 {
            vec![Self::ramp(start, end, 0.0)]
        } else if k + 1 == kk {
            vec![Self::ramp(start, end, last)]
        } else {
            vec![WindowPiece {
                start,
                end,
                terms: vec![ExpTerm { coef: C64::new(1.0, 0.0), freq: 0.0 }],
            }]
        }
    }
}
