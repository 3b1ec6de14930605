//! Elementary integrals of exponentials over intervals and triangles.
//!
//! Every pulse quantity reduces to integrals of `w(t) e^{i delta t}` where the
//! window `w` is, on each smooth piece, a sum of at most three complex
//! exponentials. The single and nested integrals of exponentials are divided
//! differences of `exp`, evaluated here without cancellation when the
//! frequencies nearly coincide.

use num_complex::Complex64 as C64;

const SERIES_RADIUS: f64 = 0.5;

/// `(e^z - 1) / z`, accurate near `z = 0`.
pub(crate) fn phi1(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        // sum_{n>=0} z^n / (n+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..30 {
            term *= z / (n as f64 + 1.0);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Divided difference `exp[a, b] = integral_0^1 e^{a s + b (1-s)} ds`.
fn exp_dd2(a: C64, b: C64) -> C64 {
    b.exp() * phi1(a - b)
}

/// Divided difference `exp[z0, z1, z2]`, i.e. the integral of
/// `exp(z0 s0 + z1 s1 + z2 s2)` over the unit 2-simplex (value 1/2 at z = 0).
pub(crate) fn exp_dd3(z: [C64; 3]) -> C64 {
    let centre = (z[0] + z[1] + z[2]) / 3.0;
    let y = [z[0] - centre, z[1] - centre, z[2] - centre];
    let radius = y.iter().fold(0.0_f64, |r, v| r.max(v.norm()));
    if radius < 1.0 {
        // exp[z] = e^c sum_n h_n(y) / (n + 2)! with h_n the complete
        // homogeneous symmetric polynomials.
        let mut a = C64::new(1.0, 0.0); // h_n(y0)
        let mut b = C64::new(1.0, 0.0); // h_n(y0, y1)
        let mut c = C64::new(1.0, 0.0); // h_n(y0, y1, y2)
        let mut fact = 2.0;
        let mut sum = c / fact;
        for n in 1..60 {
            a *= y[0];
            b = a + y[1] * b;
            c = b + y[2] * c;
            fact *= n as f64 + 2.0;
            let term = c / fact;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() && n > 3 {
                break;
            }
        }
        return centre.exp() * sum;
    }
    // Put the most separated pair at the ends so the outer division is benign.
    let d01 = (z[0] - z[1]).norm();
    let d02 = (z[0] - z[2]).norm();
    let d12 = (z[1] - z[2]).norm();
    let (p, q, r) = if d02 >= d01 && d02 >= d12 {
        (z[0], z[1], z[2])
    } else if d01 >= d12 {
        (z[0], z[2], z[1])
    } else {
        (z[1], z[0], z[2])
    };
    (exp_dd2(p, q) - exp_dd2(q, r)) / (p - r)
}

/// `integral_s^e e^{i w t} dt`.
pub(crate) fn line_exp(w: f64, s: f64, e: f64) -> C64 {
    let len = e - s;
    if len <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    C64::from_polar(1.0, w * s) * len * phi1(C64::new(0.0, w * len))
}

/// `integral_s^e dt2 integral_s^t2 dt1 e^{i w2 t2} e^{i w1 t1}`.
pub(crate) fn triangle_exp(w2: f64, w1: f64, s: f64, e: f64) -> C64 {
    let len = e - s;
    if len <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    let i = C64::new(0.0, 1.0);
    let z = [i * ((w1 + w2) * len), i * (w2 * len), C64::new(0.0, 0.0)];
    C64::from_polar(1.0, (w1 + w2) * s) * len * len * exp_dd3(z)
}

/// One term `coef e^{i freq t}` of a window expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ExpTerm {
    pub coef: C64,
    pub freq: f64,
}

/// A smooth stretch `[start, end]` of the window, `w(t) = sum terms`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WindowPiece {
    pub start: f64,
    pub end: f64,
    pub terms: Vec<ExpTerm>,
}

impl WindowPiece {
    pub fn truncated(&self, upto: f64) -> Option<WindowPiece> {
        if upto <= self.start {
            return None;
        }
        Some(WindowPiece { start: self.start, end: self.end.min(upto), terms: self.terms.clone() })
    }

    /// `integral w(t) e^{i delta t}` over the piece.
    pub fn moment(&self, delta: f64) -> C64 {
        self.terms.iter().map(|t| t.coef * line_exp(t.freq + delta, self.start, self.end)).sum()
    }

    /// `integral_{t1 < t2} w(t2) w(t1) e^{i delta (t2 - t1)}` over the piece.
    pub fn triangle(&self, delta: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &self.terms {
                acc += a.coef * b.coef * triangle_exp(a.freq + delta, b.freq - delta, self.start, self.end);
            }
        }
        acc
    }
}

/// Single and nested window integrals of one segment for one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SegmentIntegrals {
    /// `I = integral_seg w(t) e^{i delta t} dt`.
    pub moment: C64,
    /// `P = integral_seg dt2 integral_{seg start}^{t2} dt1 w(t2) w(t1) e^{i delta (t2 - t1)}`.
    pub triangle: C64,
}

/// Integrals over a segment made of consecutive pieces.
pub(crate) fn segment_integrals(pieces: &[WindowPiece], delta: f64) -> SegmentIntegrals {
    let mut moment = C64::new(0.0, 0.0);
    let mut triangle = C64::new(0.0, 0.0);
    for piece in pieces {
        let m = piece.moment(delta);
        triangle += piece.triangle(delta) + m * moment.conj();
        moment += m;
    }
    SegmentIntegrals { moment, triangle }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn phi1_branches_agree() {
        for &x in &[0.49, 0.51, -0.5, 0.3] {
            let z = C64::new(0.0, x);
            let direct = (z.exp() - 1.0) / z;
            assert!(close(phi1(z), direct, 1e-14));
        }
        assert_eq!(phi1(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn dd3_branches_agree_at_the_switch() {
        let i = C64::new(0.0, 1.0);
        // Generic separated points computed both ways.
        for &(a, b) in &[(0.9, -0.4), (1.1, 0.3), (-0.8, 0.95)] {
            let z = [i * a, i * b, C64::new(0.0, 0.0)];
            let series = exp_dd3(z);
            let formula = (exp_dd2(z[0], z[1]) - exp_dd2(z[1], z[2])) / (z[0] - z[2]);
            assert!(close(series, formula, 1e-13), "{a} {b}");
        }
        assert!(close(exp_dd3([C64::new(0.0, 0.0); 3]), C64::new(0.5, 0.0), 1e-16));
    }

    #[test]
    fn line_exp_limits() {
        assert!(close(line_exp(0.0, 1.0, 3.0), C64::new(2.0, 0.0), 1e-15));
        // Full period integrates to zero.
        let w = 2.0 * std::f64::consts::PI;
        assert!(line_exp(w, 0.3, 1.3).norm() < 1e-15);
    }

    #[test]
    fn triangle_exp_zero_frequency_is_half_square() {
        assert!(close(triangle_exp(0.0, 0.0, 2.0, 5.0), C64::new(4.5, 0.0), 1e-15));
    }

    #[test]
    fn triangle_exp_against_closed_form() {
        // For w1 = -w2 = -w: integral_0^L e^{i w t2} (e^{-i w t2} - 1)/(-i w) dt2.
        let w = 1.7;
        let l = 2.3;
        let i = C64::new(0.0, 1.0);
        let expect = (C64::new(l, 0.0) - (C64::from_polar(1.0, w * l) - 1.0) / (i * w)) / (-i * w);
        assert!(close(triangle_exp(w, -w, 0.0, l), expect, 1e-14));
    }
}
