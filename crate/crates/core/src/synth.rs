//! Synthetic modulated oscillations with closed-form ground truth.
//!
//! Times are measured from the record midpoint, `tau = t - (T - 1) dt / 2`,
//! except for the linear chirp, which starts at `omega_start` at the first
//! sample.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ellipse::EllipseParams;
use crate::error::{Error, Result};
use crate::signal::MultivariateSeries;

fn one() -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    /// `e^{i omega tau} x_o`
    PureOscillation {
        omega: f64,
        #[serde(default = "one")]
        coefficients: Vec<Complex64>,
    },
    /// `e^{i phi(tau)} x_o` with
    /// `phi = omega tau + chirp tau^2 / 2 + (fm_depth / fm_rate) sin(fm_rate tau)`.
    PhaseSignal {
        omega: f64,
        #[serde(default)]
        chirp: f64,
        #[serde(default)]
        fm_depth: f64,
        #[serde(default)]
        fm_rate: f64,
        #[serde(default = "one")]
        coefficients: Vec<Complex64>,
    },
    /// Linear chirp phase signal sweeping `omega_start` to `omega_end`.
    Chirp {
        omega_start: f64,
        omega_end: f64,
        #[serde(default = "one")]
        coefficients: Vec<Complex64>,
    },
    /// `exp(-(t - center)^2 / 2 sigma^2) e^{i (omega tau + chirp tau^2 / 2)} x_o`
    GaussianEnvelope {
        omega: f64,
        #[serde(default)]
        chirp: f64,
        sigma: f64,
        /// Envelope center in absolute time; the record midpoint if absent.
        #[serde(default)]
        center: Option<f64>,
        #[serde(default = "one")]
        coefficients: Vec<Complex64>,
    },
    /// Bivariate ellipse with linearly varying frequency, axes and orientation
    /// between the first and last samples.
    ModulatedEllipse {
        omega_start: f64,
        omega_end: f64,
        a: [f64; 2],
        b: [f64; 2],
        theta: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub samples: usize,
    #[serde(default = "unit")]
    pub dt: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub signal: SignalKind,
}

fn unit() -> f64 {
    1.0
}

/// Closed-form modulation quantities. Entries are NaN where the kind has no
/// closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    /// Analytic signal, shape `(N, T)`.
    pub analytic: Array2<Complex64>,
    pub omega: Vec<f64>,
    pub omega_dot: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub xi: Vec<f64>,
    /// `||x3|| / ||x+||`
    pub jerk: Vec<f64>,
    pub ellipse: Option<Vec<EllipseParams>>,
}

impl Truth {
    /// Stability level over `range`, from the closed-form moments.
    pub fn delta(&self, range: std::ops::Range<usize>) -> f64 {
        range
            .filter(|&i| self.omega[i].is_finite() && self.omega[i] != 0.0)
            .map(|i| {
                let w = self.omega[i].abs();
                let tb = self.upsilon[i] / w;
                let tc = (self.xi[i] / (w * w)).sqrt();
                let tj = (self.jerk[i] / (w * w * w)).cbrt();
                tb.max(tc).max(tj)
            })
            .fold(0.0, f64::max)
    }
}

struct Modulation {
    /// `log a` derivatives 0..3 and phase derivatives 0..3 per sample.
    amp: [f64; 4],
    phase: [f64; 4],
}

fn check(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("synthetic parameters"));
    }
    Ok(())
}

fn phase_truth(
    spec: &SyntheticSpec,
    coefficients: &[Complex64],
    modulation: impl Fn(f64, f64) -> Modulation,
) -> Result<Truth> {
    if coefficients.is_empty() {
        return Err(Error::InvalidInput("at least one channel coefficient is required".into()));
    }
    let (n, t) = (coefficients.len(), spec.samples);
    let mid = 0.5 * (t as f64 - 1.0) * spec.dt;
    let mut analytic = Array2::zeros((n, t));
    let (mut omega, mut omega_dot, mut upsilon, mut xi, mut jerk) =
        (vec![0.0; t], vec![0.0; t], vec![0.0; t], vec![0.0; t], vec![0.0; t]);
    for i in 0..t {
        let time = i as f64 * spec.dt;
        let m = modulation(time, time - mid);
        // a''/a and a'''/a from the log-amplitude derivatives
        let l1 = m.amp[1];
        let a2 = m.amp[2] + l1 * l1;
        let a3 = m.amp[3] + 3.0 * l1 * m.amp[2] + l1.powi(3);
        let carrier = Complex64::from_polar(m.amp[0].exp(), m.phase[0]);
        for (c, x) in coefficients.iter().enumerate() {
            analytic[[c, i]] = x * carrier;
        }
        omega[i] = m.phase[1];
        omega_dot[i] = m.phase[2];
        upsilon[i] = l1.abs();
        xi[i] = Complex64::new(a2, m.phase[2]).norm();
        jerk[i] = Complex64::new(a3, 3.0 * l1 * m.phase[2] + m.phase[3]).norm();
    }
    Ok(Truth { analytic, omega, omega_dot, upsilon, xi, jerk, ellipse: None })
}

fn ellipse_truth(spec: &SyntheticSpec, w: [f64; 2], a: [f64; 2], b: [f64; 2], theta: [f64; 2]) -> Result<Truth> {
    let t = spec.samples;
    let span = ((t.max(2) - 1) as f64) * spec.dt;
    let lerp = |p: [f64; 2], s: f64| p[0] + (p[1] - p[0]) * s;
    let c = (w[1] - w[0]) / span;
    let mut analytic = Array2::zeros((2, t));
    let mut params = Vec::with_capacity(t);
    let mut omega = vec![0.0; t];
    for i in 0..t {
        let time = i as f64 * spec.dt;
        let s = time / span;
        let e = EllipseParams {
            a: lerp(a, s),
            b: lerp(b, s),
            theta: lerp(theta, s),
            phi: w[0] * time + 0.5 * c * time * time,
        };
        let (x, y) = e.analytic_pair();
        analytic[[0, i]] = x;
        analytic[[1, i]] = y;
        omega[i] = w[0] + c * time;
        params.push(e);
    }
    let nan = vec![f64::NAN; t];
    Ok(Truth {
        analytic,
        omega,
        omega_dot: nan.clone(),
        upsilon: nan.clone(),
        xi: nan.clone(),
        jerk: nan,
        ellipse: Some(params),
    })
}

/// Noise-free truth for `spec`.
pub fn truth(spec: &SyntheticSpec) -> Result<Truth> {
    if spec.samples < 2 {
        return Err(Error::InvalidInput(format!("need at least two samples, got {}", spec.samples)));
    }
    check(&[spec.dt, spec.noise_sigma])?;
    if !(spec.dt > 0.0) || spec.noise_sigma < 0.0 {
        return Err(Error::InvalidInput("dt must be positive and noise_sigma non-negative".into()));
    }
    let span = (spec.samples - 1) as f64 * spec.dt;
    match &spec.signal {
        SignalKind::PureOscillation { omega, coefficients } => {
            check(&[*omega])?;
            let w = *omega;
            phase_truth(spec, coefficients, move |_, tau| Modulation { amp: [0.0; 4], phase: [w * tau, w, 0.0, 0.0] })
        }
        SignalKind::PhaseSignal { omega, chirp, fm_depth, fm_rate, coefficients } => {
            check(&[*omega, *chirp, *fm_depth, *fm_rate])?;
            let (w, c, d, r) = (*omega, *chirp, *fm_depth, *fm_rate);
            phase_truth(spec, coefficients, move |_, tau| {
                let (s, co) = (r * tau).sin_cos();
                let fm = if r != 0.0 { d / r * s } else { d * tau };
                Modulation {
                    amp: [0.0; 4],
                    phase: [w * tau + 0.5 * c * tau * tau + fm, w + c * tau + d * co, c - d * r * s, -d * r * r * co],
                }
            })
        }
        SignalKind::Chirp { omega_start, omega_end, coefficients } => {
            check(&[*omega_start, *omega_end])?;
            let (w0, c) = (*omega_start, (omega_end - omega_start) / span);
            phase_truth(spec, coefficients, move |time, _| Modulation {
                amp: [0.0; 4],
                phase: [w0 * time + 0.5 * c * time * time, w0 + c * time, c, 0.0],
            })
        }
        SignalKind::GaussianEnvelope { omega, chirp, sigma, center, coefficients } => {
            check(&[*omega, *chirp, *sigma, center.unwrap_or(0.0)])?;
            if !(*sigma > 0.0) {
                return Err(Error::InvalidInput(format!("envelope width must be positive, got {sigma}")));
            }
            let (w, c, sg) = (*omega, *chirp, *sigma);
            let t0 = center.unwrap_or(0.5 * span);
            if w < 3.0 / sg {
                log::warn!("carrier {w} is not well above the envelope bandwidth {}", 1.0 / sg);
            }
            phase_truth(spec, coefficients, move |time, tau| {
                let u = time - t0;
                let s2 = sg * sg;
                Modulation {
                    amp: [-0.5 * u * u / s2, -u / s2, -1.0 / s2, 0.0],
                    phase: [w * tau + 0.5 * c * tau * tau, w + c * tau, c, 0.0],
                }
            })
        }
        SignalKind::ModulatedEllipse { omega_start, omega_end, a, b, theta } => {
            check(&[*omega_start, *omega_end, a[0], a[1], b[0], b[1], theta[0], theta[1]])?;
            ellipse_truth(spec, [*omega_start, *omega_end], *a, *b, *theta)
        }
    }
}

/// Observed series `Re{x+}` plus seeded white Gaussian noise, with its truth.
pub fn generate(spec: &SyntheticSpec) -> Result<(MultivariateSeries, Truth)> {
    let truth = truth(spec)?;
    let mut data = truth.analytic.mapv(|z| z.re);
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        data.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    Ok((MultivariateSeries::new(data, spec.dt, 0.0)?, truth))
}

/// Knobs for [`float_like`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatLikeParams {
    pub samples: usize,
    /// Sample interval in days.
    pub dt: f64,
    /// Semi-major axis of the looping signal, km.
    pub amplitude: f64,
    /// Ratio of semi-minor to semi-major axis.
    pub eccentricity_ratio: f64,
    /// Start and end frequency, cycles per day.
    pub f_start: f64,
    pub f_end: f64,
    /// Lag-one correlation of the background velocity.
    pub background_memory: f64,
    /// Innovation standard deviation of the background velocity, km/day.
    pub background_sigma: f64,
    pub seed: u64,
}

impl Default for FloatLikeParams {
    fn default() -> Self {
        Self {
            samples: 10_000,
            dt: 1.0,
            amplitude: 20.0,
            eccentricity_ratio: 0.7,
            f_start: 0.2,
            f_end: 0.02,
            background_memory: 0.95,
            background_sigma: 0.5,
            seed: 1,
        }
    }
}

/// Bivariate position record (km): integrated red-noise drift plus an
/// elliptical oscillation whose frequency falls geometrically from `f_start`
/// to `f_end`. Returns the series and the oscillation's analytic signal.
pub fn float_like(params: &FloatLikeParams) -> Result<(MultivariateSeries, Array2<Complex64>)> {
    let FloatLikeParams { samples: t, dt, amplitude, eccentricity_ratio, f_start, f_end, .. } = *params;
    if t < 2 || !(dt > 0.0 && f_start > 0.0 && f_end > 0.0) {
        return Err(Error::InvalidInput("float-like record needs T >= 2, dt > 0 and positive frequencies".into()));
    }
    let span = (t - 1) as f64 * dt;
    let (w0, w1) = (2.0 * PI * f_start, 2.0 * PI * f_end);
    let k = (w1 / w0).ln() / span;
    let mut analytic = Array2::zeros((2, t));
    for i in 0..t {
        let time = i as f64 * dt;
        // phase of omega(t) = w0 exp(k t)
        let phi = if k != 0.0 { w0 * ((k * time).exp() - 1.0) / k } else { w0 * time };
        let e = EllipseParams {
            a: amplitude,
            b: amplitude * eccentricity_ratio,
            theta: 0.3 + 0.5 * time / span,
            phi,
        };
        let (x, y) = e.analytic_pair();
        analytic[[0, i]] = x;
        analytic[[1, i]] = y;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.background_sigma.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut data = analytic.mapv(|z| z.re);
    for c in 0..2 {
        let (mut vel, mut pos) = (0.0, 0.0);
        for i in 0..t {
            vel = params.background_memory * vel + normal.sample(&mut rng);
            pos += vel * dt;
            data[[c, i]] += pos;
        }
    }
    Ok((MultivariateSeries::new(data, dt, 0.0)?, analytic))
}

/// Default float-like record for `seed`.
pub fn float_like_trajectory(seed: u64) -> Result<MultivariateSeries> {
    Ok(float_like(&FloatLikeParams { seed, ..FloatLikeParams::default() })?.0)
}
