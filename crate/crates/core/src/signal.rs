//! Time-series containers, analytic-signal construction and spectral
//! differentiation.
//!
//! All spectral operations use periodic (DFT) semantics over the record. An
//! optional mirror padding reduces wraparound at the record ends.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView1, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// N real channels on a shared uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    /// Channel-major samples, shape `(N, T)`.
    pub data: Array2<f64>,
    pub dt: f64,
    pub time_origin: f64,
}

impl MultivariateSeries {
    pub fn new(data: Array2<f64>, dt: f64, time_origin: f64) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least one channel and two samples, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("sample interval must be positive, got {dt}")));
        }
        if !time_origin.is_finite() {
            return Err(Error::NonFinite("time origin"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series samples"));
        }
        Ok(Self { data, dt, time_origin })
    }

    /// Builds a series from per-channel vectors of equal length.
    pub fn from_channels(channels: &[Vec<f64>], dt: f64) -> Result<Self> {
        let n = channels.len();
        let t = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != t) {
            return Err(Error::Shape("channels differ in length".into()));
        }
        let flat: Vec<f64> = channels.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((n, t), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(data, dt, 0.0)
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn duration(&self) -> f64 {
        self.samples() as f64 * self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        self.time_origin + index as f64 * self.dt
    }

    pub fn channel_means(&self) -> Vec<f64> {
        self.data.rows().into_iter().map(|r| r.mean().unwrap_or(0.0)).collect()
    }

    /// Copy with each channel's mean subtracted, plus the removed means.
    pub fn demeaned(&self) -> (Array2<f64>, Vec<f64>) {
        let means = self.channel_means();
        let mut data = self.data.clone();
        for (mut row, m) in data.rows_mut().into_iter().zip(&means) {
            row.mapv_inplace(|v| v - m);
        }
        (data, means)
    }
}

/// N complex channels, each the analytic part of a real channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    /// Shape `(N, T)`.
    pub data: Array2<Complex64>,
    pub dt: f64,
    /// Channel means removed before projection, re-added by residual code.
    pub means: Vec<f64>,
}

impl AnalyticSignal {
    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    /// Joint norm `||x+(t)||` at every sample.
    pub fn norm(&self) -> Vec<f64> {
        self.data
            .axis_iter(Axis(1))
            .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    pub fn real_part(&self) -> Array2<f64> {
        self.data.mapv(|z| z.re)
    }
}

/// Signed DFT bin frequencies in radians per unit time.
pub fn fft_frequencies(len: usize, dt: f64) -> Vec<f64> {
    let df = 2.0 * PI / (len as f64 * dt);
    (0..len)
        .map(|k| if k <= len / 2 { k as f64 * df } else { (k as f64 - len as f64) * df })
        .collect()
}

/// Weight applied to bin `k` when projecting onto non-negative frequencies:
/// DC and an even-length Nyquist bin are kept, positive bins doubled,
/// negative bins removed.
fn analytic_weight(k: usize, len: usize) -> f64 {
    if k == 0 || (len % 2 == 0 && k == len / 2) {
        1.0
    } else if k < len.div_ceil(2) {
        2.0
    } else {
        0.0
    }
}

fn project_row(row: ArrayView1<f64>, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let len = row.len();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let scale = 1.0 / len as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= analytic_weight(k, len) * scale;
    }
    inv.process(&mut buf);
    buf
}

/// Mirror-extends each row by `pad` samples on both sides (edge sample not repeated).
pub(crate) fn mirror_pad(data: &Array2<f64>, pad: usize) -> Array2<f64> {
    let (n, t) = data.dim();
    let pad = pad.min(t.saturating_sub(1));
    let mut out = Array2::zeros((n, t + 2 * pad));
    for ch in 0..n {
        for i in 0..t + 2 * pad {
            let j = i as isize - pad as isize;
            let src = if j < 0 {
                (-j) as usize
            } else if j as usize >= t {
                2 * (t - 1) - j as usize
            } else {
                j as usize
            };
            out[[ch, i]] = data[[ch, src]];
        }
    }
    out
}

/// Analytic signal of every channel after mean removal.
pub fn analytic_signal(x: &MultivariateSeries) -> Result<AnalyticSignal> {
    analytic_signal_padded(x, 0)
}

/// As [`analytic_signal`], with `pad` samples of mirror padding at each end
/// (clamped to one less than the record length).
pub fn analytic_signal_padded(x: &MultivariateSeries, pad: usize) -> Result<AnalyticSignal> {
    if x.samples() < 2 || x.channels() == 0 {
        return Err(Error::InvalidInput("empty series".into()));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series samples"));
    }
    let (demeaned, means) = x.demeaned();
    let t = x.samples();
    let pad = pad.min(t - 1);
    let work = if pad > 0 { mirror_pad(&demeaned, pad) } else { demeaned };
    let mut planner = FftPlanner::new();
    let mut data = Array2::zeros((x.channels(), t));
    for (ch, row) in work.rows().into_iter().enumerate() {
        let z = project_row(row, &mut planner);
        for (i, v) in z[pad..pad + t].iter().enumerate() {
            data[[ch, i]] = *v;
        }
    }
    Ok(AnalyticSignal { data, dt: x.dt, means })
}

/// Time derivative of order 1..=3, exact for band-limited periodic content.
pub fn spectral_derivative(z: &AnalyticSignal, order: usize) -> Result<AnalyticSignal> {
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let t = z.samples();
    let omega = fft_frequencies(t, z.dt);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(t);
    let inv = planner.plan_fft_inverse(t);
    let factors: Vec<Complex64> = omega
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            // Nyquist bin counted as positive frequency.
            let w = if t % 2 == 0 && k == t / 2 { w.abs() } else { w };
            Complex64::new(0.0, w).powu(order as u32) / t as f64
        })
        .collect();
    let mut data = z.data.clone();
    for mut row in data.rows_mut() {
        let mut buf: Vec<Complex64> = row.to_vec();
        fwd.process(&mut buf);
        for (c, f) in buf.iter_mut().zip(&factors) {
            *c *= f;
        }
        inv.process(&mut buf);
        for (dst, src) in row.iter_mut().zip(buf) {
            *dst = src;
        }
    }
    Ok(AnalyticSignal { data, dt: z.dt, means: vec![0.0; z.channels()] })
}

/// Canonical amplitudes (>= 0) and phases in (-pi, pi]; zero maps to phase 0.
pub fn polar_decompose(z: &AnalyticSignal) -> (Array2<f64>, Array2<f64>) {
    let amp = z.data.mapv(|c| c.norm());
    let phase = z.data.mapv(|c| {
        if c.norm_sqr() == 0.0 {
            0.0
        } else {
            let p = c.arg();
            if p <= -PI { PI } else { p }
        }
    });
    (amp, phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn series(rows: Vec<Vec<f64>>, dt: f64) -> MultivariateSeries {
        MultivariateSeries::from_channels(&rows, dt).unwrap()
    }

    #[test]
    fn cosine_becomes_unit_phasor() {
        let t = 256;
        let w0 = 2.0 * PI * 10.0 / t as f64;
        let x = series(vec![(0..t).map(|i| (w0 * i as f64).cos()).collect()], 1.0);
        let z = analytic_signal(&x).unwrap();
        for i in 0..t {
            let expect = Complex64::from_polar(1.0, w0 * i as f64);
            assert!((z.data[[0, i]] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn amplitude_and_phase_of_shifted_sinusoid() {
        let t = 512;
        let (a1, w1, p1) = (1.7, 2.0 * PI * 37.0 / t as f64, 0.4);
        let x = series(vec![(0..t).map(|i| a1 * (w1 * i as f64 + p1).cos()).collect()], 1.0);
        let z = analytic_signal(&x).unwrap();
        let (amp, phase) = polar_decompose(&z);
        for i in 0..t {
            assert!((amp[[0, i]] - a1).abs() < 1e-12);
            let want = Complex64::from_polar(1.0, w1 * i as f64 + p1);
            assert!((Complex64::from_polar(1.0, phase[[0, i]]) - want).norm() < 1e-12);
        }
    }

    /// Quadrature pair checked against a direct O(T^2) discrete Hilbert transform.
    #[test]
    fn quadrature_pair_matches_brute_force_hilbert() {
        let t = 1024;
        let w0 = 2.0 * PI * 31.0 / t as f64;
        let c: Vec<f64> = (0..t).map(|i| (w0 * i as f64).cos()).collect();
        let s: Vec<f64> = (0..t).map(|i| (w0 * i as f64).sin()).collect();
        let x = series(vec![c.clone(), s.clone()], 1.0);
        let z = analytic_signal(&x).unwrap();

        // Periodic discrete Hilbert transform for even length: kernel
        // h[m] = (2/T) cot(pi m / T) for odd m, 0 for even m.
        let hilbert = |v: &[f64]| -> Vec<f64> {
            (0..t)
                .map(|n| {
                    (0..t)
                        .filter(|m| (n + t - m) % 2 == 1)
                        .map(|m| {
                            let d = (n + t - m) % t;
                            v[m] * 2.0 / t as f64 / (PI * d as f64 / t as f64).tan()
                        })
                        .sum()
                })
                .collect()
        };
        let hc = hilbert(&c);
        let hs = hilbert(&s);
        for i in 0..t {
            let oracle0 = Complex64::new(c[i], hc[i]);
            let oracle1 = Complex64::new(s[i], hs[i]);
            assert!((z.data[[0, i]] - oracle0).norm() < 1e-10);
            assert!((z.data[[1, i]] - oracle1).norm() < 1e-10);
            let e = Complex64::from_polar(1.0, w0 * i as f64);
            assert!((z.data[[1, i]] - Complex64::new(0.0, -1.0) * e).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        let bad = Array2::from_shape_vec((1, 3), vec![0.0, f64::NAN, 1.0]).unwrap();
        assert!(matches!(MultivariateSeries::new(bad, 1.0, 0.0), Err(Error::NonFinite(_))));
        let empty = Array2::<f64>::zeros((1, 0));
        assert!(matches!(MultivariateSeries::new(empty, 1.0, 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn derivative_of_phasor() {
        let t = 128;
        let w0 = 2.0 * PI * 5.0 / (t as f64 * 0.5);
        let data = Array2::from_shape_fn((1, t), |(_, i)| Complex64::from_polar(1.0, w0 * i as f64 * 0.5));
        let z = AnalyticSignal { data, dt: 0.5, means: vec![0.0] };
        let d1 = spectral_derivative(&z, 1).unwrap();
        let d2 = spectral_derivative(&z, 2).unwrap();
        for i in 0..t {
            let e = z.data[[0, i]];
            assert!((d1.data[[0, i]] - Complex64::new(0.0, w0) * e).norm() < 1e-11);
            assert!((d2.data[[0, i]] + w0 * w0 * e).norm() < 1e-10);
        }
        assert!(matches!(spectral_derivative(&z, 4), Err(Error::UnsupportedOrder(4))));
        assert!(matches!(spectral_derivative(&z, 0), Err(Error::UnsupportedOrder(0))));
    }

    /// Eighth-order central differences as the oracle for a Gaussian-envelope chirp.
    #[test]
    fn derivative_matches_high_order_differences() {
        let t = 2048;
        let dt = 1.0;
        let t0 = t as f64 / 2.0;
        let sigma = 150.0;
        let f = |s: f64| {
            let tau = s - t0;
            let a = (-tau * tau / (2.0 * sigma * sigma)).exp();
            Complex64::from_polar(a, 0.3 * tau + 0.5 * 2e-4 * tau * tau)
        };
        let data = Array2::from_shape_fn((1, t), |(_, i)| f(i as f64 * dt));
        let z = AnalyticSignal { data, dt, means: vec![0.0] };
        let d1 = spectral_derivative(&z, 1).unwrap();
        let coef = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let peak = (0..t).map(|i| d1.data[[0, i]].norm()).fold(0.0, f64::max);
        for i in 400..t - 400 {
            let s = i as f64 * dt;
            let fd: Complex64 = coef
                .iter()
                .enumerate()
                .map(|(k, c)| (f(s + (k + 1) as f64 * dt) - f(s - (k + 1) as f64 * dt)) * *c)
                .sum::<Complex64>()
                / dt;
            assert!((d1.data[[0, i]] - fd).norm() <= 1e-6 * peak, "sample {i}");
        }
    }

    #[test]
    fn polar_zero_convention() {
        let data = Array2::from_shape_vec(
            (1, 2),
            vec![Complex64::new(0.0, 0.0), Complex64::from_polar(2.0, PI / 4.0)],
        )
        .unwrap();
        let z = AnalyticSignal { data, dt: 1.0, means: vec![0.0] };
        let (a, p) = polar_decompose(&z);
        assert_eq!((a[[0, 0]], p[[0, 0]]), (0.0, 0.0));
        assert!((a[[0, 1]] - 2.0).abs() < 1e-15 && (p[[0, 1]] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_padding_reduces_edge_error() {
        // Non-periodic tone: padding should not hurt interior reconstruction.
        let t = 500;
        let w = 0.2;
        let x = series(vec![(0..t).map(|i| (w * i as f64).cos()).collect()], 1.0);
        let z = analytic_signal_padded(&x, 100).unwrap();
        let means = x.channel_means();
        for i in 0..t {
            assert!((z.data[[0, i]].re - (x.data[[0, i]] - means[0])).abs() < 0.2);
        }
        assert_eq!(z.samples(), t);
    }
}
