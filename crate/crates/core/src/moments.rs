//! Intrinsic deviation vectors and joint instantaneous moments.
//!
//! For an analytic N-vector `x+(t)` demodulated at the joint instantaneous
//! frequency `omega(t)`, the p-th deviation vector is the p-th local-time
//! derivative of `exp(-i omega tau) x+(t + tau)` at `tau = 0`. Bandwidth and
//! curvature are the first two deviation norms relative to `||x+||`.

use std::ops::Range;

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{spectral_derivative, AnalyticSignal};

/// Samples whose norm is below this fraction of the record maximum are invalid.
pub const AMPLITUDE_FLOOR: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSet {
    pub x1: Array2<Complex64>,
    pub x2: Array2<Complex64>,
    pub x3: Array2<Complex64>,
    /// Joint instantaneous frequency; NaN where invalid.
    pub omega: Vec<f64>,
    /// Joint chirp rate; NaN where invalid.
    pub omega_dot: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub xi: Vec<f64>,
    pub norm: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DeviationSet {
    pub fn samples(&self) -> usize {
        self.omega.len()
    }
}

fn check_shape(a: &AnalyticSignal, b: &AnalyticSignal) -> Result<()> {
    if a.data.dim() != b.data.dim() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.data.dim(), b.data.dim())));
    }
    Ok(())
}

fn inner(a: ArrayView2<Complex64>, b: ArrayView2<Complex64>, t: usize) -> Complex64 {
    a.column(t).iter().zip(b.column(t)).map(|(x, y)| x.conj() * y).sum()
}

fn validity(norm: &[f64]) -> Vec<bool> {
    let max = norm.iter().copied().fold(0.0, f64::max);
    norm.iter().map(|&n| n > 0.0 && n >= AMPLITUDE_FLOOR * max).collect()
}

/// `Im{x+^H x+'} / ||x+||^2`, the power-weighted mean channel frequency.
pub fn joint_frequency(z: &AnalyticSignal, z1: &AnalyticSignal) -> Result<Vec<f64>> {
    check_shape(z, z1)?;
    let norm = z.norm();
    let valid = validity(&norm);
    Ok((0..z.samples())
        .map(|t| {
            if valid[t] {
                inner(z.data.view(), z1.data.view(), t).im / (norm[t] * norm[t])
            } else {
                f64::NAN
            }
        })
        .collect())
}

/// Deviation vectors of orders 1..3 plus the scalar moments, given the
/// signal and its first three time derivatives.
///
/// The chirp rate is the exact derivative of the joint frequency series,
/// `(Im{x^H x''} - 2 omega Re{x^H x'}) / ||x||^2`, evaluated from the supplied
/// derivatives.
pub fn deviation_vectors(
    z: &AnalyticSignal,
    z1: &AnalyticSignal,
    z2: &AnalyticSignal,
    z3: &AnalyticSignal,
) -> Result<DeviationSet> {
    check_shape(z, z1)?;
    check_shape(z, z2)?;
    check_shape(z, z3)?;
    let (n, t) = z.data.dim();
    let norm = z.norm();
    let valid = validity(&norm);
    let mut x1 = Array2::zeros((n, t));
    let mut x2 = Array2::zeros((n, t));
    let mut x3 = Array2::zeros((n, t));
    let mut omega = vec![f64::NAN; t];
    let mut omega_dot = vec![f64::NAN; t];
    let mut upsilon = vec![f64::NAN; t];
    let mut xi = vec![f64::NAN; t];
    for i in 0..t {
        if !valid[i] {
            continue;
        }
        let p = norm[i] * norm[i];
        let w = inner(z.data.view(), z1.data.view(), i).im / p;
        let proj1 = inner(z.data.view(), z1.data.view(), i);
        let proj2 = inner(z.data.view(), z2.data.view(), i);
        omega[i] = w;
        omega_dot[i] = (proj2.im - 2.0 * w * proj1.re) / p;
        let (mut s1, mut s2) = (0.0, 0.0);
        for c in 0..n {
            let (a, a1, a2, a3) = (z.data[[c, i]], z1.data[[c, i]], z2.data[[c, i]], z3.data[[c, i]]);
            let d1 = a1 - I * w * a;
            let d2 = a2 - I * (2.0 * w) * a1 - a * (w * w);
            let d3 = a3 - I * (3.0 * w) * a2 - a1 * (3.0 * w * w) + I * (w * w * w) * a;
            s1 += d1.norm_sqr();
            s2 += d2.norm_sqr();
            x1[[c, i]] = d1;
            x2[[c, i]] = d2;
            x3[[c, i]] = d3;
        }
        upsilon[i] = s1.sqrt() / norm[i];
        xi[i] = s2.sqrt() / norm[i];
    }
    Ok(DeviationSet { x1, x2, x3, omega, omega_dot, upsilon, xi, norm, valid })
}

/// Deviation set of `z` using spectral derivatives.
pub fn deviations(z: &AnalyticSignal) -> Result<DeviationSet> {
    let z1 = spectral_derivative(z, 1)?;
    let z2 = spectral_derivative(z, 2)?;
    let z3 = spectral_derivative(z, 3)?;
    deviation_vectors(z, &z1, &z2, &z3)
}

/// `||x+' - i w x+||^2 / ||x+||^2` for a trial frequency `w`.
pub fn frequency_error_curve(z: &AnalyticSignal, z1: &AnalyticSignal, omega_trial: f64) -> Result<Vec<f64>> {
    check_shape(z, z1)?;
    let norm = z.norm();
    let valid = validity(&norm);
    Ok((0..z.samples())
        .map(|t| {
            if !valid[t] {
                return f64::NAN;
            }
            let e: f64 = z
                .data
                .column(t)
                .iter()
                .zip(z1.data.column(t))
                .map(|(a, a1)| (a1 - I * omega_trial * a).norm_sqr())
                .sum();
            e / (norm[t] * norm[t])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub delta: f64,
    /// sup |upsilon / omega|
    pub term_bandwidth: f64,
    /// sup sqrt(xi / omega^2)
    pub term_curvature: f64,
    /// sup (||x3|| / (||x+|| |omega|^3))^(1/3), a computable stand-in for the
    /// remainder bound
    pub term_jerk: f64,
    pub start: usize,
    pub end: usize,
    pub is_modulated_oscillation: bool,
}

/// Dimensionless ratios below this are treated as FFT round-off before the
/// square and cube roots of the stability terms are taken.
pub const RATIO_NOISE_FLOOR: f64 = 1e-10;

fn above_noise(v: f64) -> f64 {
    if v < RATIO_NOISE_FLOOR { 0.0 } else { v }
}

/// Local stability level over `interval`, skipping invalid samples.
pub fn stability_level(d: &DeviationSet, interval: Range<usize>) -> Result<StabilityReport> {
    let end = interval.end.min(d.samples());
    let start = interval.start.min(end);
    let (mut tb, mut tc, mut tj) = (0.0f64, 0.0f64, 0.0f64);
    let mut any = false;
    for i in start..end {
        let w = d.omega[i].abs();
        if !d.valid[i] || !(w > 0.0) {
            continue;
        }
        any = true;
        let x3: f64 = d.x3.column(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        tb = tb.max(d.upsilon[i] / w);
        tc = tc.max(above_noise(d.xi[i] / (w * w)).sqrt());
        tj = tj.max(above_noise(x3 / (d.norm[i] * w * w * w)).cbrt());
    }
    if !any {
        return Err(Error::EmptyInterval);
    }
    let delta = tb.max(tc).max(tj);
    Ok(StabilityReport {
        delta,
        term_bandwidth: tb,
        term_curvature: tc,
        term_jerk: tj,
        start,
        end,
        is_modulated_oscillation: delta < 1.0,
    })
}

const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Eighth-order central difference along time; `None` within four samples
/// of either end.
pub fn central_difference<T>(series: &[T], dt: f64) -> Vec<Option<T>>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = series.len();
    (0..n)
        .map(|i| {
            if i < 4 || i + 4 >= n {
                return None;
            }
            let mut acc = (series[i + 1] - series[i - 1]) * FD8[0];
            for (k, c) in FD8.iter().enumerate().skip(1) {
                acc = acc + (series[i + k + 1] - series[i - k - 1]) * *c;
            }
            Some(acc * (1.0 / dt))
        })
        .collect()
}

/// Maximum relative residuals of the projection and derivative identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `x^H x1 / ||x||^2 - ||x||'/||x||`, relative to omega.
    pub amplitude_rate: f64,
    /// `Im{x^H x2} / ||x||^2 - omega'`, relative to omega^2.
    pub chirp_projection: f64,
    /// `x1' + i omega' x - (x2 + i omega x1)`, relative to ||x|| omega^2.
    pub first_derivative: f64,
    /// `x2' + 2 i omega' x1 - (x3 + i omega x2)`, relative to ||x|| omega^3.
    pub second_derivative: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.amplitude_rate
            .max(self.chirp_projection)
            .max(self.first_derivative)
            .max(self.second_derivative)
    }
}

/// Evaluates the identities at samples `margin..T-margin`, differentiating
/// derived series with eighth-order central differences.
pub fn projection_identities(d: &DeviationSet, z: &AnalyticSignal, margin: usize) -> Result<IdentityResiduals> {
    let (n, t) = z.data.dim();
    if d.x1.dim() != (n, t) {
        return Err(Error::Shape("deviation set does not match signal".into()));
    }
    let dt = z.dt;
    let norm_rate = central_difference(&d.norm, dt);
    let x1_rate: Vec<Vec<Option<Complex64>>> =
        d.x1.axis_iter(Axis(0)).map(|row| central_difference(&row.to_vec(), dt)).collect();
    let x2_rate: Vec<Vec<Option<Complex64>>> =
        d.x2.axis_iter(Axis(0)).map(|row| central_difference(&row.to_vec(), dt)).collect();

    let mut res = IdentityResiduals { amplitude_rate: 0.0, chirp_projection: 0.0, first_derivative: 0.0, second_derivative: 0.0 };
    let mut any = false;
    for i in margin.max(4)..t.saturating_sub(margin.max(4)) {
        let w = d.omega[i];
        let wd = d.omega_dot[i];
        if !d.valid[i] || !w.is_finite() || w == 0.0 {
            continue;
        }
        let Some(nr) = norm_rate[i] else { continue };
        any = true;
        let p = d.norm[i] * d.norm[i];
        let proj1 = inner(z.data.view(), d.x1.view(), i) / p;
        let r1 = (proj1 - Complex64::new(nr / d.norm[i], 0.0)).norm() / w.abs();
        let proj2 = inner(z.data.view(), d.x2.view(), i) / p;
        let r2 = (proj2.im - wd).abs() / (w * w);
        let (mut s3, mut s4) = (0.0, 0.0);
        for c in 0..n {
            let (Some(d1), Some(d2)) = (x1_rate[c][i], x2_rate[c][i]) else { continue };
            let lhs3 = d1 + I * wd * z.data[[c, i]];
            let rhs3 = d.x2[[c, i]] + I * w * d.x1[[c, i]];
            s3 += (lhs3 - rhs3).norm_sqr();
            let lhs4 = d2 + I * (2.0 * wd) * d.x1[[c, i]];
            let rhs4 = d.x3[[c, i]] + I * w * d.x2[[c, i]];
            s4 += (lhs4 - rhs4).norm_sqr();
        }
        let r3 = s3.sqrt() / (d.norm[i] * w * w);
        let r4 = s4.sqrt() / (d.norm[i] * w.abs().powi(3));
        res.amplitude_rate = res.amplitude_rate.max(r1);
        res.chirp_projection = res.chirp_projection.max(r2);
        res.first_derivative = res.first_derivative.max(r3);
        res.second_derivative = res.second_derivative.max(r4);
    }
    if !any {
        return Err(Error::EmptyInterval);
    }
    Ok(res)
}
