//! FFT-based analytic wavelet transform of multichannel series.
//!
//! With `Psi(w_psi) = 2` and the `1/s` normalization, every scale is a
//! bandpass filter whose output at the matched scale of a sinusoid carries
//! the sinusoid's amplitude.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morse::MorseWavelet;
use crate::signal::{fft_frequencies, mirror_pad, MultivariateSeries};

/// Log-spaced analysis frequencies (radian, decreasing) and matching scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub frequencies: Vec<f64>,
    pub scales: Vec<f64>,
}

impl ScaleGrid {
    /// `levels` radian frequencies from `omega_max` down to `omega_min`.
    pub fn log_spaced(levels: usize, omega_min: f64, omega_max: f64, wavelet: &MorseWavelet) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidGrid("grid needs at least one level".into()));
        }
        if !(omega_min.is_finite() && omega_max.is_finite() && omega_min > 0.0 && omega_min < omega_max) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < f_min < f_max, got {omega_min} and {omega_max}"
            )));
        }
        let ratio = (omega_min / omega_max).ln();
        let frequencies: Vec<f64> = (0..levels)
            .map(|j| {
                if levels == 1 {
                    omega_max
                } else {
                    omega_max * (ratio * j as f64 / (levels - 1) as f64).exp()
                }
            })
            .collect();
        Ok(Self::from_frequencies(frequencies, wavelet))
    }

    /// Grid from cyclic frequencies (cycles per unit time).
    pub fn from_cyclic(levels: usize, f_min: f64, f_max: f64, wavelet: &MorseWavelet) -> Result<Self> {
        Self::log_spaced(levels, 2.0 * PI * f_min, 2.0 * PI * f_max, wavelet)
    }

    pub fn from_frequencies(frequencies: Vec<f64>, wavelet: &MorseWavelet) -> Self {
        let wp = wavelet.peak_frequency();
        let scales = frequencies.iter().map(|f| wp / f).collect();
        Self { frequencies, scales }
    }

    pub fn levels(&self) -> usize {
        self.frequencies.len()
    }

    /// Mean spacing in natural-log scale between adjacent levels.
    pub fn log_spacing(&self) -> f64 {
        let s = self.levels();
        if s < 2 {
            return 0.0;
        }
        (self.scales[s - 1] / self.scales[0]).ln() / (s - 1) as f64
    }

    pub fn check_nyquist(&self, dt: f64) -> Result<()> {
        let nyquist = PI / dt;
        match self.frequencies.iter().copied().fold(None, |m: Option<f64>, f| Some(m.map_or(f, |m| m.max(f)))) {
            Some(f) if f < nyquist => Ok(()),
            Some(f) => Err(Error::InvalidGrid(format!(
                "highest frequency {f} rad/unit is not below the Nyquist frequency {nyquist}"
            ))),
            None => Err(Error::InvalidGrid("empty grid".into())),
        }
    }
}

/// Samples at each end of the record within two wavelet half-durations,
/// `2 P / omega`, of the boundary.
pub fn edge_width(wavelet: &MorseWavelet, omega: f64, dt: f64) -> usize {
    (2.0 * wavelet.duration() / (omega * dt)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformOptions {
    /// Number of time-derivative cubes to compute (0, 1 or 2).
    pub derivatives: usize,
    /// Mirror-pad the record by the widest edge band before transforming.
    pub pad: bool,
}

/// Transform values over (channel, scale, time), time contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformCube {
    pub w: Array3<Complex64>,
    pub wt: Option<Array3<Complex64>>,
    pub wtt: Option<Array3<Complex64>>,
    pub grid: ScaleGrid,
    pub wavelet: MorseWavelet,
    pub dt: f64,
    pub time_origin: f64,
    pub edge_width: Vec<usize>,
    pub padded: bool,
}

impl TransformCube {
    pub fn channels(&self) -> usize {
        self.w.dim().0
    }

    pub fn levels(&self) -> usize {
        self.w.dim().1
    }

    pub fn samples(&self) -> usize {
        self.w.dim().2
    }

    /// Joint modulus `||w(t, s_j)||`, shape `(S, T)`.
    pub fn modulus(&self) -> Array2<f64> {
        self.w.map_axis(Axis(0), |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn is_edge(&self, level: usize, t: usize) -> bool {
        let e = self.edge_width[level];
        t < e || t + e >= self.samples()
    }
}

/// Analytic wavelet transform by per-scale multiplication with `Psi(s w)`
/// over positive DFT bins (Nyquist bin at half weight).
pub fn transform(
    x: &MultivariateSeries,
    wavelet: &MorseWavelet,
    grid: &ScaleGrid,
    options: TransformOptions,
) -> Result<TransformCube> {
    let wavelet = wavelet.for_transform()?;
    if options.derivatives > 2 {
        return Err(Error::UnsupportedOrder(options.derivatives));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series samples"));
    }
    grid.check_nyquist(x.dt)?;
    let (n, t) = (x.channels(), x.samples());
    let levels = grid.levels();
    let edge: Vec<usize> = grid.frequencies.iter().map(|&f| edge_width(&wavelet, f, x.dt)).collect();

    let p = wavelet.duration();
    if let Some(&fmin) = grid.frequencies.last() {
        if (t as f64) < 4.0 * p / (fmin * x.dt) {
            log::warn!(
                "record of {t} samples is short for the lowest analysis frequency; \
                 recommended at least {:.0}",
                4.0 * p / (fmin * x.dt)
            );
        }
    }

    let (demeaned, _) = x.demeaned();
    let pad = if options.pad { edge.iter().copied().max().unwrap_or(0).min(t - 1) } else { 0 };
    let work = if pad > 0 { mirror_pad(&demeaned, pad) } else { demeaned };
    let len = work.ncols();

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let spectra: Vec<Vec<Complex64>> = work
        .rows()
        .into_iter()
        .map(|row| {
            let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fwd.process(&mut buf);
            buf
        })
        .collect();

    let omega = fft_frequencies(len, x.dt);
    let half = len / 2;
    let nyquist_bin = if len % 2 == 0 { Some(half) } else { None };
    // Only bins 1..=len/2 carry positive frequencies.
    let positive: Vec<usize> = (1..=half).collect();

    let lanes = n * levels;
    let deriv = options.derivatives;
    let results: Vec<[Vec<Complex64>; 3]> = (0..lanes)
        .into_par_iter()
        .map(|lane| {
            let (ch, j) = (lane / levels, lane % levels);
            let s = grid.scales[j];
            let spec = &spectra[ch];
            let mut base = vec![Complex64::new(0.0, 0.0); len];
            for &k in &positive {
                let weight = if Some(k) == nyquist_bin { 0.5 } else { 1.0 };
                // Psi is real, so Psi* = Psi.
                base[k] = spec[k] * (weight * wavelet.evaluate_freq(s * omega[k].abs()) / len as f64);
            }
            let mut out: [Vec<Complex64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
            for (order, slot) in out.iter_mut().enumerate().take(deriv + 1) {
                let mut buf = base.clone();
                if order > 0 {
                    for &k in &positive {
                        buf[k] *= Complex64::new(0.0, omega[k].abs()).powu(order as u32);
                    }
                }
                let mut scratch = vec![Complex64::new(0.0, 0.0); inv.get_inplace_scratch_len()];
                inv.process_with_scratch(&mut buf, &mut scratch);
                *slot = buf[pad..pad + t].to_vec();
            }
            out
        })
        .collect();

    let assemble = |order: usize| -> Array3<Complex64> {
        let mut cube = Array3::zeros((n, levels, t));
        for (lane, r) in results.iter().enumerate() {
            let (ch, j) = (lane / levels, lane % levels);
            for (dst, src) in cube.slice_mut(ndarray::s![ch, j, ..]).iter_mut().zip(&r[order]) {
                *dst = *src;
            }
        }
        cube
    };

    Ok(TransformCube {
        w: assemble(0),
        wt: (deriv >= 1).then(|| assemble(1)),
        wtt: (deriv >= 2).then(|| assemble(2)),
        grid: grid.clone(),
        wavelet,
        dt: x.dt,
        time_origin: x.time_origin,
        edge_width: edge,
        padded: pad > 0,
    })
}

/// Relative floor below which transform-domain ratios are marked invalid.
pub const MODULUS_FLOOR: f64 = 1e-8;

/// Joint transform frequency `Im{w^H w_t} / ||w||^2`, shape `(S, T)`;
/// NaN where `||w||` falls below [`MODULUS_FLOOR`] times the cube maximum.
pub fn transform_frequency(cube: &TransformCube) -> Result<Array2<f64>> {
    let wt = cube.wt.as_ref().ok_or(Error::MissingDerivative("first"))?;
    let (n, levels, t) = cube.w.dim();
    let power = cube.w.map_axis(Axis(0), |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>());
    let floor = MODULUS_FLOOR * MODULUS_FLOOR * power.iter().copied().fold(0.0, f64::max);
    let mut out = Array2::from_elem((levels, t), f64::NAN);
    for j in 0..levels {
        for i in 0..t {
            let pw = power[[j, i]];
            if pw <= floor || pw == 0.0 {
                continue;
            }
            let cross: f64 = (0..n).map(|c| (cube.w[[c, j, i]].conj() * wt[[c, j, i]]).im).sum();
            out[[j, i]] = cross / pw;
        }
    }
    Ok(out)
}

/// Transform-domain second deviation `w_tt - 2i Omega w_t - Omega^2 w`;
/// zero where the transform frequency is undefined.
pub fn transform_curvature(cube: &TransformCube) -> Result<Array3<Complex64>> {
    let wt = cube.wt.as_ref().ok_or(Error::MissingDerivative("first"))?;
    let wtt = cube.wtt.as_ref().ok_or(Error::MissingDerivative("second"))?;
    let omega = transform_frequency(cube)?;
    let (n, levels, t) = cube.w.dim();
    let mut out = Array3::zeros((n, levels, t));
    for c in 0..n {
        for j in 0..levels {
            for i in 0..t {
                let o = omega[[j, i]];
                if o.is_nan() {
                    continue;
                }
                out[[c, j, i]] = wtt[[c, j, i]] - Complex64::new(0.0, 2.0 * o) * wt[[c, j, i]] - cube.w[[c, j, i]] * (o * o);
            }
        }
    }
    Ok(out)
}
