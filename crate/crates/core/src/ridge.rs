//! Joint amplitude ridges of a transform cube.
//!
//! A ridge point is a scale-local maximum of `||w(t, s)||`. Points are
//! refined between grid levels, chained in time into single-valued curves,
//! pruned by duration in cycles, and evaluated for the along-ridge signal,
//! frequency, curvature and bias estimates.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwt::{edge_width, TransformCube};
use crate::error::{Error, Result};
use crate::morse::MorseWavelet;
use crate::signal::MultivariateSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgePoint {
    pub t_index: usize,
    /// Lower bracketing grid level; the point lies between `level` and `level + 1`.
    pub level: usize,
    /// Position between the bracketing levels in log scale, in `[0, 1]`.
    pub frac: f64,
    pub scale: f64,
    /// Ridge frequency `w_psi / scale`.
    pub frequency: f64,
    /// Transform vector interpolated between the levels, rescaled to `magnitude`.
    pub value: Vec<Complex64>,
    /// Peak of the parabola fitted to `log ||w||` against `log s`.
    pub magnitude: f64,
    pub edge_flag: bool,
}

impl RidgePoint {
    pub fn log_scale(&self) -> f64 {
        self.scale.ln()
    }
}

/// Default ridge floor: this fraction of the largest `||w||` in the cube.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-3;

pub fn default_floor(cube: &TransformCube) -> f64 {
    DEFAULT_FLOOR_RATIO * cube.modulus().iter().copied().fold(0.0, f64::max)
}

fn interp_level(a: &Array3<Complex64>, ch: usize, level: usize, frac: f64, t: usize) -> Complex64 {
    let lo = a[[ch, level, t]];
    if frac == 0.0 || level + 1 >= a.dim().1 {
        return lo;
    }
    lo * (1.0 - frac) + a[[ch, level + 1, t]] * frac
}

/// Vertex `(x, y)` of the parabola through three points, with `x` clamped to
/// the outer pair. Falls back to the middle point when the fit is not concave.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    if y.iter().any(|v| !v.is_finite()) {
        return (x[1], y[1]);
    }
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if !(curv < 0.0) {
        return (x[1], y[1]);
    }
    let v = (0.5 * (x[0] + x[1]) - d1 / (2.0 * curv)).clamp(x[0], x[2]);
    // Newton form through the first two points plus the curvature term
    let peak = y[0] + d1 * (v - x[0]) + curv * (v - x[0]) * (v - x[1]);
    (v, peak.max(y[1]))
}

fn is_edge(t: usize, samples: usize, width: usize) -> bool {
    t < width || t + width >= samples
}

/// Ridge points at every sample: interior scale maxima of `||w||` above
/// `magnitude_floor`, refined by a parabola in (log s, log ||w||).
pub fn detect_ridge_points(cube: &TransformCube, magnitude_floor: f64) -> Result<Vec<Vec<RidgePoint>>> {
    let (n, levels, t) = cube.w.dim();
    if levels < 3 {
        return Err(Error::GridTooSmall(levels));
    }
    let modulus = cube.modulus();
    let log_s: Vec<f64> = cube.grid.scales.iter().map(|s| s.ln()).collect();
    let wp = cube.wavelet.peak_frequency();
    Ok((0..t)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 1..levels - 1 {
                let m = modulus[[j, i]];
                if !(m > modulus[[j - 1, i]] && m >= modulus[[j + 1, i]] && m > magnitude_floor) {
                    continue;
                }
                let y = [modulus[[j - 1, i]].ln(), m.ln(), modulus[[j + 1, i]].ln()];
                let (u, peak) = parabola_vertex([log_s[j - 1], log_s[j], log_s[j + 1]], y);
                let (level, frac) = if u >= log_s[j] {
                    (j, (u - log_s[j]) / (log_s[j + 1] - log_s[j]))
                } else {
                    (j - 1, (u - log_s[j - 1]) / (log_s[j] - log_s[j - 1]))
                };
                let magnitude = peak.exp();
                let mut value: Vec<Complex64> = (0..n).map(|c| interp_level(&cube.w, c, level, frac, i)).collect();
                scale_to(&mut value, magnitude);
                let scale = u.exp();
                let frequency = wp / scale;
                out.push(RidgePoint {
                    t_index: i,
                    level,
                    frac,
                    scale,
                    frequency,
                    value,
                    magnitude,
                    edge_flag: is_edge(i, t, edge_width(&cube.wavelet, frequency, cube.dt)),
                });
            }
            out
        })
        .collect())
}

/// A time-contiguous chain of ridge points with along-ridge estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeCurve {
    pub points: Vec<RidgePoint>,
    /// Estimated analytic signal, shape `(N, L)`.
    pub signal: Array2<Complex64>,
    /// Estimated frequency (radian); the ridge frequency until estimated.
    pub frequency: Vec<f64>,
    /// Estimated curvature `||w2|| / ||w||`; NaN until estimated.
    pub curvature: Vec<f64>,
    /// Estimated bias of `signal`, shape `(N, L)`.
    pub bias: Array2<Complex64>,
    /// Completed cycles over non-edge samples.
    pub cycles: f64,
}

impl RidgeCurve {
    fn from_points(points: Vec<RidgePoint>, dt: f64) -> Self {
        let n = points.first().map_or(0, |p| p.value.len());
        let l = points.len();
        let mut signal = Array2::zeros((n, l));
        for (k, p) in points.iter().enumerate() {
            for (c, v) in p.value.iter().enumerate() {
                signal[[c, k]] = *v;
            }
        }
        let frequency: Vec<f64> = points.iter().map(|p| p.frequency).collect();
        let mut curve = Self {
            signal,
            curvature: vec![f64::NAN; l],
            bias: Array2::zeros((n, l)),
            frequency,
            points,
            cycles: 0.0,
        };
        curve.cycles = curve.count_cycles(dt);
        curve
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> usize {
        self.points.first().map_or(0, |p| p.t_index)
    }

    /// One past the last sample index.
    pub fn end(&self) -> usize {
        self.points.last().map_or(0, |p| p.t_index + 1)
    }

    pub fn channels(&self) -> usize {
        self.signal.nrows()
    }

    /// `sum |frequency| dt / 2 pi` over non-edge samples.
    pub fn count_cycles(&self, dt: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.frequency)
            .filter(|(p, f)| !p.edge_flag && f.is_finite())
            .map(|(_, f)| f.abs() * dt / (2.0 * PI))
            .sum()
    }

    /// Normalized bias magnitude `||bias|| / ||signal||` per sample.
    pub fn relative_bias(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let b: f64 = self.bias.column(k).iter().map(|z| z.norm_sqr()).sum();
                let s: f64 = self.signal.column(k).iter().map(|z| z.norm_sqr()).sum();
                (b / s).sqrt()
            })
            .collect()
    }
}

/// Chaining controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    /// Largest allowed `|d log s|` between consecutive samples.
    pub max_dlogscale: f64,
    pub min_cycles: f64,
}

impl ChainOptions {
    /// Bound of `max_level_jump` grid levels per sample and the `2P` cycle rule.
    pub fn for_cube(cube: &TransformCube, max_level_jump: f64) -> Self {
        Self {
            max_dlogscale: max_level_jump * cube.grid.log_spacing(),
            min_cycles: 2.0 * cube.wavelet.duration(),
        }
    }
}

/// Greedy chaining of ridge points into curves. At each sample, candidate
/// links from running curves are taken in order of smallest log-scale jump,
/// then largest magnitude. Curves shorter than `min_cycles` are dropped.
pub fn chain_ridges(points: &[Vec<RidgePoint>], dt: f64, options: ChainOptions) -> Vec<RidgeCurve> {
    let mut finished: Vec<Vec<RidgePoint>> = Vec::new();
    let mut active: Vec<Vec<RidgePoint>> = Vec::new();
    for row in points {
        let mut links: Vec<(f64, f64, usize, usize)> = Vec::new();
        for (a, curve) in active.iter().enumerate() {
            let last = curve.last().expect("active curves are non-empty").log_scale();
            for (b, p) in row.iter().enumerate() {
                let jump = (p.log_scale() - last).abs();
                if jump <= options.max_dlogscale {
                    links.push((jump, p.magnitude, a, b));
                }
            }
        }
        links.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then(y.1.total_cmp(&x.1))
                .then(x.2.cmp(&y.2))
                .then(x.3.cmp(&y.3))
        });
        let mut curve_used = vec![false; active.len()];
        let mut point_used = vec![false; row.len()];
        let mut extend: Vec<Option<usize>> = vec![None; active.len()];
        for &(_, _, a, b) in &links {
            if !curve_used[a] && !point_used[b] {
                curve_used[a] = true;
                point_used[b] = true;
                extend[a] = Some(b);
            }
        }
        let mut next = Vec::new();
        for (a, mut curve) in active.drain(..).enumerate() {
            match extend[a] {
                Some(b) => {
                    curve.push(row[b].clone());
                    next.push(curve);
                }
                None => finished.push(curve),
            }
        }
        for (b, p) in row.iter().enumerate() {
            if !point_used[b] {
                next.push(vec![p.clone()]);
            }
        }
        active = next;
    }
    finished.extend(active);
    let mut curves: Vec<RidgeCurve> = finished
        .into_iter()
        .map(|pts| RidgeCurve::from_points(pts, dt))
        .filter(|c| c.cycles >= options.min_cycles)
        .collect();
    curves.sort_by(|a, b| a.start().cmp(&b.start()).then(a.points[0].scale.total_cmp(&b.points[0].scale)));
    curves
}

/// Rescales `v` to norm `magnitude`; zero vectors are left alone.
fn scale_to(v: &mut [Complex64], magnitude: f64) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z *= magnitude / norm);
    }
}

/// Values of `a` along the ridge, with the same per-point gain that takes the
/// interpolated `w` to the refined magnitude, so ratios such as the transform
/// frequency are those of the interpolated cube.
fn along<'a>(
    curve: &'a RidgeCurve,
    w: &'a Array3<Complex64>,
    a: &'a Array3<Complex64>,
) -> impl Iterator<Item = Vec<Complex64>> + 'a {
    let n = a.dim().0;
    curve.points.iter().map(move |p| {
        let interp = |arr: &Array3<Complex64>| -> Vec<Complex64> {
            (0..n).map(|c| interp_level(arr, c, p.level, p.frac, p.t_index)).collect()
        };
        let norm = interp(w).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let gain = if norm > 0.0 { p.magnitude / norm } else { 1.0 };
        interp(a).into_iter().map(|z| z * gain).collect()
    })
}

/// Transform values along the ridge, shape `(N, L)`.
pub fn estimate_signal(curve: &RidgeCurve, cube: &TransformCube) -> Array2<Complex64> {
    let mut out = Array2::zeros((cube.channels(), curve.len()));
    for (k, v) in along(curve, &cube.w, &cube.w).enumerate() {
        for (c, z) in v.into_iter().enumerate() {
            out[[c, k]] = z;
        }
    }
    out
}

fn ridge_frequency(w: &[Complex64], wt: &[Complex64]) -> f64 {
    let p: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let cross: f64 = w.iter().zip(wt).map(|(a, b)| (a.conj() * b).im).sum();
    if p > 0.0 {
        cross / p
    } else {
        f64::NAN
    }
}

/// Transform frequency `Im{w^H w_t} / ||w||^2` along the ridge.
pub fn estimate_frequency(curve: &RidgeCurve, cube: &TransformCube) -> Result<Vec<f64>> {
    let wt = cube.wt.as_ref().ok_or(Error::MissingDerivative("first"))?;
    Ok(along(curve, &cube.w, &cube.w).zip(along(curve, &cube.w, wt)).map(|(w, d)| ridge_frequency(&w, &d)).collect())
}

/// Bias vectors `P^2 w2 / (2 Omega^2)` and curvature `||w2|| / ||w||`.
pub fn estimate_bias(curve: &RidgeCurve, cube: &TransformCube) -> Result<(Array2<Complex64>, Vec<f64>)> {
    let wt = cube.wt.as_ref().ok_or(Error::MissingDerivative("first"))?;
    let wtt = cube.wtt.as_ref().ok_or(Error::MissingDerivative("second"))?;
    let n = cube.channels();
    let half_p2 = 0.5 * cube.wavelet.duration().powi(2);
    let mut bias = Array2::zeros((n, curve.len()));
    let mut curvature = vec![f64::NAN; curve.len()];
    for (k, ((w, d1), d2)) in along(curve, &cube.w, &cube.w).zip(along(curve, &cube.w, wt)).zip(along(curve, &cube.w, wtt)).enumerate() {
        let om = ridge_frequency(&w, &d1);
        if !om.is_finite() || om == 0.0 {
            continue;
        }
        let (mut s2, mut p) = (0.0, 0.0);
        for c in 0..n {
            let w2 = d2[c] - Complex64::new(0.0, 2.0 * om) * d1[c] - w[c] * (om * om);
            bias[[c, k]] = w2 * (half_p2 / (om * om));
            s2 += w2.norm_sqr();
            p += w[c].norm_sqr();
        }
        curvature[k] = (s2 / p).sqrt();
    }
    Ok((bias, curvature))
}

/// Fills all along-ridge estimates of `curve` from `cube` and recounts cycles
/// with the estimated frequency.
pub fn estimate_along(curve: &mut RidgeCurve, cube: &TransformCube) -> Result<()> {
    curve.signal = estimate_signal(curve, cube);
    curve.frequency = estimate_frequency(curve, cube)?;
    let (bias, curvature) = estimate_bias(curve, cube)?;
    curve.bias = bias;
    curve.curvature = curvature;
    curve.cycles = curve.count_cycles(cube.dt);
    Ok(())
}

/// Detection, chaining, pruning and estimation in one pass. Pruning uses the
/// ridge frequency; reported cycles use the estimated frequency.
pub fn extract_ridges(
    cube: &TransformCube,
    magnitude_floor: f64,
    options: ChainOptions,
) -> Result<Vec<RidgeCurve>> {
    let points = detect_ridge_points(cube, magnitude_floor)?;
    let mut curves = chain_ridges(&points, cube.dt, options);
    curves.par_iter_mut().try_for_each(|c| estimate_along(c, cube))?;
    Ok(curves)
}

/// Power-weighted merge of curves that overlap in time. Each group of
/// overlapping curves becomes one curve over the union of their spans;
/// samples covered by a single curve pass through unchanged.
pub fn merge_overlaps(curves: &[RidgeCurve], wavelet: &MorseWavelet, dt: f64, samples: usize) -> Vec<RidgeCurve> {
    let mut order: Vec<usize> = (0..curves.len()).filter(|&i| !curves[i].is_empty()).collect();
    order.sort_by_key(|&i| (curves[i].start(), curves[i].end()));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_end = 0;
    for i in order {
        match groups.last_mut() {
            Some(g) if curves[i].start() < group_end => {
                g.push(i);
                group_end = group_end.max(curves[i].end());
            }
            _ => {
                groups.push(vec![i]);
                group_end = curves[i].end();
            }
        }
    }
    groups
        .into_iter()
        .map(|g| {
            if g.len() == 1 {
                curves[g[0]].clone()
            } else {
                merge_group(&g.iter().map(|&i| &curves[i]).collect::<Vec<_>>(), wavelet, dt, samples)
            }
        })
        .collect()
}

fn merge_group(group: &[&RidgeCurve], wavelet: &MorseWavelet, dt: f64, samples: usize) -> RidgeCurve {
    let start = group.iter().map(|c| c.start()).min().unwrap_or(0);
    let end = group.iter().map(|c| c.end()).max().unwrap_or(0);
    let n = group[0].channels();
    let l = end - start;
    let wp = wavelet.peak_frequency();
    let mut signal = Array2::zeros((n, l));
    let mut bias = Array2::zeros((n, l));
    let mut frequency = vec![f64::NAN; l];
    let mut curvature = vec![f64::NAN; l];
    let mut points = Vec::with_capacity(l);
    for k in 0..l {
        let t = start + k;
        let members: Vec<(&RidgeCurve, usize, f64)> = group
            .iter()
            .filter(|c| c.start() <= t && t < c.end())
            .map(|c| {
                let idx = t - c.start();
                let w: f64 = c.signal.column(idx).iter().map(|z| z.norm_sqr()).sum();
                (*c, idx, w)
            })
            .collect();
        let total: f64 = members.iter().map(|m| m.2).sum();
        let weight = |w: f64| if total > 0.0 { w / total } else { 1.0 / members.len() as f64 };
        let (mut f, mut xi, mut log_s) = (0.0, 0.0, 0.0);
        let mut heaviest = &members[0];
        for m in &members {
            let a = weight(m.2);
            for c in 0..n {
                signal[[c, k]] += m.0.signal[[c, m.1]] * a;
                bias[[c, k]] += m.0.bias[[c, m.1]] * a;
            }
            f += a * m.0.frequency[m.1];
            xi += a * m.0.curvature[m.1];
            log_s += a * m.0.points[m.1].log_scale();
            if m.2 > heaviest.2 {
                heaviest = m;
            }
        }
        frequency[k] = f;
        curvature[k] = xi;
        let scale = log_s.exp();
        let rf = wp / scale;
        let value: Vec<Complex64> = signal.column(k).to_vec();
        let src = &heaviest.0.points[heaviest.1];
        points.push(RidgePoint {
            t_index: t,
            level: src.level,
            frac: src.frac,
            scale,
            frequency: rf,
            magnitude: value.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            value,
            edge_flag: is_edge(t, samples, edge_width(wavelet, rf, dt)),
        });
    }
    let mut merged = RidgeCurve { points, signal, frequency, curvature, bias, cycles: 0.0 };
    merged.cycles = merged.count_cycles(dt);
    merged
}

/// Per-sample combined estimate over the record: `None` where no curve
/// exists. Overlapping curves are merged first.
pub fn combined_estimate(
    curves: &[RidgeCurve],
    wavelet: &MorseWavelet,
    dt: f64,
    channels: usize,
    samples: usize,
) -> Vec<Option<Vec<Complex64>>> {
    let mut out = vec![None; samples];
    for c in merge_overlaps(curves, wavelet, dt, samples) {
        for (k, p) in c.points.iter().enumerate() {
            if p.t_index < samples {
                out[p.t_index] = Some((0..channels).map(|ch| c.signal[[ch, k]]).collect());
            }
        }
    }
    out
}

/// `x - Re{x_hat}` wherever an estimate exists; `x` elsewhere.
pub fn residual(x: &MultivariateSeries, curves: &[RidgeCurve], wavelet: &MorseWavelet) -> MultivariateSeries {
    let (n, t) = (x.channels(), x.samples());
    let mut data = x.data.clone();
    for (i, est) in combined_estimate(curves, wavelet, x.dt, n, t).into_iter().enumerate() {
        if let Some(v) = est {
            for c in 0..n {
                data[[c, i]] -= v[c].re;
            }
        }
    }
    MultivariateSeries { data, dt: x.dt, time_origin: x.time_origin }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleDiagnostic {
    /// sup over non-edge samples of `|s omega / w_psi - 1|`
    pub sup_deviation: f64,
    /// `sup_deviation / delta^2`
    pub ratio: f64,
}

/// Deviation of the ridge scale from the frequency-matched scale, against a
/// known frequency aligned with the curve's samples.
pub fn ridge_scale_diagnostic(
    curve: &RidgeCurve,
    wavelet: &MorseWavelet,
    truth_frequency: &[f64],
    delta: f64,
) -> Result<ScaleDiagnostic> {
    if truth_frequency.len() != curve.len() {
        return Err(Error::Shape(format!(
            "truth has {} samples, curve has {}",
            truth_frequency.len(),
            curve.len()
        )));
    }
    let wp = wavelet.peak_frequency();
    let sup = curve
        .points
        .iter()
        .zip(truth_frequency)
        .filter(|(p, _)| !p.edge_flag)
        .map(|(p, w)| (p.scale * w / wp - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ScaleDiagnostic { sup_deviation: sup, ratio: sup / (delta * delta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwt::{transform, ScaleGrid, TransformOptions};

    fn cube_of(channels: &[Vec<f64>], grid: &ScaleGrid, wav: &MorseWavelet) -> TransformCube {
        let x = MultivariateSeries::from_channels(channels, 1.0).unwrap();
        transform(&x, wav, grid, TransformOptions { derivatives: 2, pad: false }).unwrap()
    }

    fn tone(t: usize, w: f64, a: f64) -> Vec<f64> {
        (0..t).map(|i| a * (w * i as f64).cos()).collect()
    }

    #[test]
    fn parabola_vertex_recovers_exact_quadratic() {
        let f = |x: f64| -2.0 * (x - 0.37).powi(2) + 1.0;
        let (v, peak) = parabola_vertex([0.0, 0.5, 1.2], [f(0.0), f(0.5), f(1.2)]);
        assert!((v - 0.37).abs() < 1e-12 && (peak - 1.0).abs() < 1e-12);
        assert_eq!(parabola_vertex([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]), (1.0, 1.0));
    }

    #[test]
    fn sinusoid_gives_one_point_per_sample_near_its_frequency() {
        let t = 1024;
        let w1 = 2.0 * PI * 64.0 / t as f64;
        let wav = MorseWavelet::default();
        let grid = ScaleGrid::log_spaced(80, 0.05, 2.0, &wav).unwrap();
        let cube = cube_of(&[tone(t, w1, 1.0)], &grid, &wav);
        let pts = detect_ridge_points(&cube, default_floor(&cube)).unwrap();
        let half_cell = 0.5 * grid.log_spacing();
        for row in &pts {
            assert_eq!(row.len(), 1);
            assert!((row[0].frequency / w1).ln().abs() <= half_cell);
            assert!((row[0].magnitude - 1.0).abs() < 5e-3);
        }
        // the grid maximum and its neighbours never exceed the refined magnitude
        let m = cube.modulus();
        for row in &pts {
            let (p, i) = (&row[0], row[0].t_index);
            let j = if m[[p.level, i]] >= m[[p.level + 1, i]] { p.level } else { p.level + 1 };
            for k in j - 1..=j + 1 {
                assert!(p.magnitude >= m[[k, i]] * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn infinite_floor_and_small_grid() {
        let wav = MorseWavelet::default();
        let grid = ScaleGrid::log_spaced(10, 0.1, 2.0, &wav).unwrap();
        let cube = cube_of(&[tone(256, 0.5, 1.0)], &grid, &wav);
        assert!(detect_ridge_points(&cube, f64::INFINITY).unwrap().iter().all(Vec::is_empty));
        let small = ScaleGrid::log_spaced(2, 0.1, 2.0, &wav).unwrap();
        let cube = cube_of(&[tone(256, 0.5, 1.0)], &small, &wav);
        assert!(matches!(detect_ridge_points(&cube, 0.0), Err(Error::GridTooSmall(2))));
    }

    #[test]
    fn two_tones_make_two_disjoint_curves() {
        let t = 2048;
        let (w1, w2) = (2.0 * PI * 40.0 / t as f64, 2.0 * PI * 320.0 / t as f64);
        let wav = MorseWavelet::default();
        let grid = ScaleGrid::log_spaced(60, 0.05, 2.0, &wav).unwrap();
        let x: Vec<f64> = tone(t, w1, 1.0).iter().zip(tone(t, w2, 0.7)).map(|(a, b)| a + b).collect();
        let cube = cube_of(&[x], &grid, &wav);
        let curves = extract_ridges(&cube, default_floor(&cube), ChainOptions::for_cube(&cube, 2.0)).unwrap();
        assert_eq!(curves.len(), 2);
        for c in &curves {
            assert_eq!(c.len(), t);
            let f: Vec<f64> = c.points.iter().map(|p| p.frequency).collect();
            let mean = f.iter().sum::<f64>() / t as f64;
            let var = f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64;
            assert!(var.sqrt() < 0.02 * mean);
        }
        let mut means: Vec<f64> = curves.iter().map(|c| c.frequency[t / 2]).collect();
        means.sort_by(f64::total_cmp);
        // each tone leaks about 1% into the other's ridge
        assert!((means[0] - w1).abs() < 2e-2 * w1 && (means[1] - w2).abs() < 2e-2 * w2);
    }

    #[test]
    fn pure_oscillation_estimates() {
        let t = 2048;
        let w1 = 2.0 * PI * 128.0 / t as f64;
        let wav = MorseWavelet::default();
        let grid = ScaleGrid::log_spaced(50, 0.1, 1.5, &wav).unwrap();
        let x = [tone(t, w1, 1.0), (0..t).map(|i| (w1 * i as f64).sin()).collect()];
        let cube = cube_of(&x, &grid, &wav);
        let curves = extract_ridges(&cube, default_floor(&cube), ChainOptions::for_cube(&cube, 2.0)).unwrap();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        let rel = c.relative_bias();
        for k in 0..c.len() {
            let m: f64 = c.signal.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((m / 2f64.sqrt() - 1.0).abs() < 5e-3);
            assert!((c.frequency[k] / w1 - 1.0).abs() < 1e-3);
            assert!(rel[k] < 1e-3);
        }
        let truth = vec![w1; c.len()];
        let diag = ridge_scale_diagnostic(c, &wav, &truth, 0.1).unwrap();
        assert!(diag.sup_deviation <= 0.5 * grid.log_spacing());
    }

    #[test]
    fn zero_cube_has_no_ridges() {
        let wav = MorseWavelet::default();
        let grid = ScaleGrid::log_spaced(10, 0.1, 2.0, &wav).unwrap();
        let cube = cube_of(&[vec![0.0; 256]], &grid, &wav);
        let curves = extract_ridges(&cube, default_floor(&cube), ChainOptions::for_cube(&cube, 2.0)).unwrap();
        assert!(curves.is_empty());
    }

    fn flat_curve(start: usize, len: usize, value: Complex64, freq: f64) -> RidgeCurve {
        let points = (start..start + len)
            .map(|t| RidgePoint {
                t_index: t,
                level: 0,
                frac: 0.0,
                scale: 1.0 / freq,
                frequency: freq,
                value: vec![value],
                magnitude: value.norm(),
                edge_flag: false,
            })
            .collect();
        let mut c = RidgeCurve::from_points(points, 1.0);
        c.curvature = vec![0.0; len];
        c
    }

    #[test]
    fn merge_is_power_weighted() {
        let wav = MorseWavelet::new(1.0, 1.0).unwrap();
        let v1 = Complex64::new(2.0, 0.0);
        let v2 = Complex64::new(0.0, 1.0);
        let a = flat_curve(0, 10, v1, 0.5);
        let b = flat_curve(9, 5, v2, 0.25);
        let merged = merge_overlaps(&[a.clone(), b.clone()], &wav, 1.0, 100);
        assert_eq!(merged.len(), 1);
        let m = &merged[0];
        assert_eq!((m.start(), m.end()), (0, 14));
        assert_eq!(m.signal[[0, 9]], (v1 * 4.0 + v2) / 5.0);
        assert!((m.frequency[9] - (4.0 * 0.5 + 0.25) / 5.0).abs() < 1e-15);
        assert_eq!(m.signal[[0, 0]], v1);
        assert_eq!(m.signal[[0, 13]], v2);

        let dup = merge_overlaps(&[a.clone(), a.clone()], &wav, 1.0, 100);
        assert_eq!(dup.len(), 1);
        assert_eq!(dup[0].signal, a.signal);
        assert_eq!(dup[0].frequency, a.frequency);

        let apart = merge_overlaps(&[a.clone(), flat_curve(20, 5, v2, 0.25)], &wav, 1.0, 100);
        assert_eq!(apart, vec![a, flat_curve(20, 5, v2, 0.25)]);
    }

    #[test]
    fn residual_without_curves_is_input() {
        let wav = MorseWavelet::default();
        let x = MultivariateSeries::from_channels(&[tone(64, 0.5, 1.0)], 1.0).unwrap();
        assert_eq!(residual(&x, &[], &wav), x);
    }

    #[test]
    fn chaining_respects_jump_bound() {
        let p = |t: usize, s: f64| RidgePoint {
            t_index: t,
            level: 0,
            frac: 0.0,
            scale: s,
            frequency: 1.0 / s,
            value: vec![Complex64::new(1.0, 0.0)],
            magnitude: 1.0,
            edge_flag: false,
        };
        let rows = vec![vec![p(0, 1.0)], vec![p(1, 1.05), p(1, 1.5)], vec![p(2, 1.1), p(2, 1.6)]];
        let opts = ChainOptions { max_dlogscale: 0.1, min_cycles: 0.0 };
        let curves = chain_ridges(&rows, 1.0, opts);
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].len(), 3);
        assert_eq!(curves[1].len(), 2);
        for c in &curves {
            for w in c.points.windows(2) {
                assert!((w[1].log_scale() - w[0].log_scale()).abs() <= 0.1);
                assert_eq!(w[1].t_index, w[0].t_index + 1);
            }
        }
        let pruned = chain_ridges(&rows, 1.0, ChainOptions { max_dlogscale: 0.1, min_cycles: 0.3 });
        assert_eq!(pruned.len(), 1);
    }
}
