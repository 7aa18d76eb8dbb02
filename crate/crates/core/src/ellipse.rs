//! Ellipse parameters of a bivariate analytic signal.
//!
//! With rotary components `p = (x + i y) / 2` and `n = (x - i y) / 2`, the
//! pair traces `z(t) = e^{i theta} (a cos phi + i b sin phi)` in the plane.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub a: f64,
    /// Signed semi-minor axis; positive for counterclockwise motion.
    pub b: f64,
    /// Orientation in `(-pi/2, pi/2]`.
    pub theta: f64,
    /// Phase in `(-pi, pi]`.
    pub phi: f64,
}

impl EllipseParams {
    /// Position `(x, y)` relative to the center.
    pub fn position(&self) -> (f64, f64) {
        let z = Complex64::from_polar(1.0, self.theta) * Complex64::new(self.a * self.phi.cos(), self.b * self.phi.sin());
        (z.re, z.im)
    }

    /// Analytic pair `(x+, y+)` with these parameters.
    pub fn analytic_pair(&self) -> (Complex64, Complex64) {
        let rot = Complex64::from_polar(1.0, self.phi);
        let (s, c) = self.theta.sin_cos();
        (
            rot * Complex64::new(self.a * c, self.b * s),
            rot * Complex64::new(self.a * s, -self.b * c),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseSnapshot {
    pub t_index: usize,
    pub center: [f64; 2],
    pub params: EllipseParams,
}

/// Wraps to `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Ellipse parameters of one bivariate analytic sample. A vanishing pair
/// gives all-zero parameters.
pub fn ellipse_params(x_plus: Complex64, y_plus: Complex64) -> EllipseParams {
    let i = Complex64::new(0.0, 1.0);
    let p = (x_plus + i * y_plus) * 0.5;
    let n = (x_plus - i * y_plus) * 0.5;
    let (mp, mn) = (p.norm(), n.norm());
    if mp == 0.0 && mn == 0.0 {
        return EllipseParams { a: 0.0, b: 0.0, theta: 0.0, phi: 0.0 };
    }
    // conj(n) carries the clockwise rotation as a positive angle
    let (ap, an) = (if mp > 0.0 { p.arg() } else { 0.0 }, if mn > 0.0 { n.conj().arg() } else { 0.0 });
    let mut theta = 0.5 * (ap + an);
    let mut phi = 0.5 * (ap - an);
    if mp == 0.0 {
        theta = 0.0;
        phi = -an;
    }
    if mn == 0.0 {
        theta = 0.0;
        phi = ap;
    }
    theta = wrap_pi(theta);
    if theta <= -PI / 2.0 {
        theta += PI;
        phi += PI;
    } else if theta > PI / 2.0 {
        theta -= PI;
        phi += PI;
    }
    EllipseParams { a: mp + mn, b: mp - mn, theta, phi: wrap_pi(phi) }
}

/// `n_points` samples of the outline, magnified about the center; shape `(2, n_points)`.
pub fn ellipse_outline(snapshot: &EllipseSnapshot, n_points: usize, magnification: f64) -> Array2<f64> {
    let n_points = n_points.max(8);
    let EllipseParams { a, b, theta, .. } = snapshot.params;
    let rot = Complex64::from_polar(magnification, theta);
    let mut out = Array2::zeros((2, n_points));
    for k in 0..n_points {
        let lam = 2.0 * PI * k as f64 / n_points as f64;
        let z = rot * Complex64::new(a * lam.cos(), b * lam.sin());
        out[[0, k]] = snapshot.center[0] + z.re;
        out[[1, k]] = snapshot.center[1] + z.im;
    }
    out
}

/// Indices spaced by one estimated period, accumulating phase
/// `sum omega dt` along the record. Non-finite or non-positive frequencies
/// do not advance the phase.
pub fn snapshot_times(freq_estimate: &[f64], dt: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut phase = 0.0;
    let mut next = 0.0;
    for (i, &w) in freq_estimate.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            continue;
        }
        // tolerance absorbs round-off in the accumulated phase
        if phase >= next - 1e-9 {
            out.push(i);
            next += 2.0 * PI;
        }
        phase += w * dt;
    }
    out
}
