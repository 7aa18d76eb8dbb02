//! End-to-end ridge analysis: transform, ridges, along-ridge estimates,
//! power-weighted merge, residual and (for N = 2) ellipse snapshots.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cwt::{transform, ScaleGrid, TransformCube, TransformOptions};
use crate::ellipse::{ellipse_params, snapshot_times, EllipseSnapshot};
use crate::error::{Error, Result};
use crate::morse::{MorseWavelet, SuitabilityReport};
use crate::ridge::{chain_ridges, detect_ridge_points, estimate_along, merge_overlaps, residual, ChainOptions, RidgeCurve};
use crate::signal::MultivariateSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletConfig {
    pub beta: f64,
    pub gamma: f64,
}

/// Log-spaced grid in cyclic frequency (cycles per time unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub levels: usize,
    pub f_min: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainingConfig {
    /// Largest scale change between consecutive samples, in grid levels.
    pub max_level_jump: f64,
    /// Minimum ridge length in cycles; `2P` when absent.
    #[serde(default)]
    pub min_cycles: Option<f64>,
    /// Ridge floor as a fraction of the largest transform modulus.
    pub floor_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub ridges: Option<String>,
    #[serde(default)]
    pub residual: Option<String>,
    #[serde(default)]
    pub ellipses: Option<String>,
    #[serde(default)]
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub wavelet: WaveletConfig,
    pub grid: GridConfig,
    pub chaining: ChainingConfig,
    #[serde(default)]
    pub pad: bool,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl PipelineConfig {
    /// beta 3, gamma 3, 82 levels over 0.01..0.28 cycles per time unit, 6 cycles.
    pub fn standard() -> Self {
        Self {
            wavelet: WaveletConfig { beta: 3.0, gamma: 3.0 },
            grid: GridConfig { levels: 82, f_min: 0.01, f_max: 0.28 },
            chaining: ChainingConfig { max_level_jump: 2.0, min_cycles: Some(6.0), floor_ratio: 1e-3 },
            pad: false,
            outputs: OutputPaths::default(),
        }
    }

    /// beta 8, gamma 3, 140 levels over 0.01..0.34 cycles per time unit.
    pub fn high_frequency() -> Self {
        let mut c = Self::standard();
        c.wavelet.beta = 8.0;
        c.grid = GridConfig { levels: 140, f_min: 0.01, f_max: 0.34 };
        c.chaining.min_cycles = None;
        c
    }

    pub fn morse(&self) -> Result<MorseWavelet> {
        MorseWavelet::new(self.wavelet.beta, self.wavelet.gamma)?.for_transform()
    }

    pub fn min_cycles(&self) -> Result<f64> {
        Ok(self.chaining.min_cycles.unwrap_or(2.0 * self.morse()?.duration()))
    }

    pub fn validate(&self, dt: f64) -> Result<()> {
        let GridConfig { levels, f_min, f_max } = self.grid;
        if levels < 3 {
            return Err(Error::GridTooSmall(levels));
        }
        let nyquist = 0.5 / dt;
        if !(f_min > 0.0 && f_min < f_max && f_max < nyquist) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < f_min < f_max < {nyquist} (cyclic Nyquist), got {f_min} and {f_max}"
            )));
        }
        if !(self.min_cycles()? > 0.0) {
            return Err(Error::InvalidInput("min_cycles must be positive".into()));
        }
        if !(self.chaining.max_level_jump > 0.0 && self.chaining.floor_ratio >= 0.0) {
            return Err(Error::InvalidInput("max_level_jump must be positive and floor_ratio non-negative".into()));
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn scale_grid(&self) -> Result<ScaleGrid> {
        ScaleGrid::from_cyclic(self.grid.levels, self.grid.f_min, self.grid.f_max, &self.morse()?)
    }
}

/// Transform with both derivative cubes, as the ridge stage requires.
pub fn run_transform(config: &PipelineConfig, x: &MultivariateSeries) -> Result<TransformCube> {
    config.validate(x.dt)?;
    transform(x, &config.morse()?, &config.scale_grid()?, TransformOptions { derivatives: 2, pad: config.pad })
}

/// Ridges of `cube`, estimated and pruned per `config`, before merging.
pub fn run_ridges(config: &PipelineConfig, cube: &TransformCube) -> Result<Vec<RidgeCurve>> {
    let max = cube.modulus().iter().copied().fold(0.0, f64::max);
    let points = detect_ridge_points(cube, config.chaining.floor_ratio * max)?;
    let options = ChainOptions {
        max_dlogscale: config.chaining.max_level_jump * cube.grid.log_spacing(),
        min_cycles: config.min_cycles()?,
    };
    let mut curves = chain_ridges(&points, cube.dt, options);
    for c in curves.iter_mut() {
        estimate_along(c, cube)?;
    }
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeSummary {
    pub start: usize,
    pub end: usize,
    pub cycles: f64,
    /// sup over non-edge samples of `sqrt(xi_hat) / omega_hat`
    pub delta_proxy: f64,
    pub mean_freq_cyc: f64,
    pub mean_magnitude: f64,
}

impl RidgeSummary {
    pub fn of(c: &RidgeCurve) -> Self {
        let interior: Vec<usize> = (0..c.len()).filter(|&k| !c.points[k].edge_flag).collect();
        let delta_proxy = interior
            .iter()
            .map(|&k| c.curvature[k].sqrt() / c.frequency[k].abs())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        let l = c.len().max(1) as f64;
        Self {
            start: c.start(),
            end: c.end(),
            cycles: c.cycles,
            delta_proxy,
            mean_freq_cyc: c.frequency.iter().filter(|f| f.is_finite()).sum::<f64>() / l / (2.0 * PI),
            mean_magnitude: (0..c.len())
                .map(|k| c.signal.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                .sum::<f64>()
                / l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub units: String,
    pub channels: usize,
    pub samples: usize,
    pub dt: f64,
    pub time_origin: f64,
    pub peak_frequency: f64,
    pub duration: f64,
    pub min_cycles: f64,
    pub max_dlogscale: f64,
    /// Edge band per grid level, in samples.
    pub edge_width: Vec<usize>,
    pub raw_ridge_count: usize,
    pub ridges: Vec<RidgeSummary>,
    pub occupied_samples: usize,
    /// Suitability of the wavelet at the largest ridge stability proxy; absent
    /// without ridges or when that proxy is not below one.
    pub suitability: Option<SuitabilityReport>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub cube: TransformCube,
    /// Merged curves; at most one per sample.
    pub curves: Vec<RidgeCurve>,
    pub residual: MultivariateSeries,
    pub ellipses: Option<Vec<EllipseSnapshot>>,
    pub diagnostics: Diagnostics,
}

/// Ellipse snapshots at one-period spacing along each merged curve, centered
/// on the residual position.
pub fn ellipse_snapshots(curves: &[RidgeCurve], residual: &MultivariateSeries) -> Vec<EllipseSnapshot> {
    let mut out = Vec::new();
    for c in curves {
        for k in snapshot_times(&c.frequency, residual.dt) {
            let t = c.points[k].t_index;
            out.push(EllipseSnapshot {
                t_index: t,
                center: [residual.data[[0, t]], residual.data[[1, t]]],
                params: ellipse_params(c.signal[[0, k]], c.signal[[1, k]]),
            });
        }
    }
    out.sort_by_key(|s| s.t_index);
    out
}

pub fn run_pipeline(config: &PipelineConfig, x: &MultivariateSeries) -> Result<PipelineOutput> {
    let cube = run_transform(config, x)?;
    let raw = run_ridges(config, &cube)?;
    let wavelet = cube.wavelet;
    let curves = merge_overlaps(&raw, &wavelet, x.dt, x.samples());
    let res = residual(x, &curves, &wavelet);
    let ellipses = (x.channels() == 2).then(|| ellipse_snapshots(&curves, &res));
    let ridges: Vec<RidgeSummary> = curves.iter().map(RidgeSummary::of).collect();
    let worst = ridges.iter().map(|r| r.delta_proxy).fold(0.0, f64::max);
    let suitability = if worst > 0.0 && worst < 1.0 { wavelet.suitability_check(worst, 4).ok() } else { None };
    let diagnostics = Diagnostics {
        format_version: crate::io::FORMAT_VERSION,
        config: config.clone(),
        config_hash: config.hash(),
        units: "grid frequencies in cycles per time unit; ridge frequencies in radian per time unit".into(),
        channels: x.channels(),
        samples: x.samples(),
        dt: x.dt,
        time_origin: x.time_origin,
        peak_frequency: wavelet.peak_frequency(),
        duration: wavelet.duration(),
        min_cycles: config.min_cycles()?,
        max_dlogscale: config.chaining.max_level_jump * cube.grid.log_spacing(),
        edge_width: cube.edge_width.clone(),
        raw_ridge_count: raw.len(),
        occupied_samples: curves.iter().map(RidgeCurve::len).sum(),
        ridges,
        suitability,
    };
    Ok(PipelineOutput { cube, curves, residual: res, ellipses, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_constants() {
        let d = PipelineConfig::standard();
        assert_eq!((d.wavelet.beta, d.wavelet.gamma, d.grid.levels), (3.0, 3.0, 82));
        assert_eq!((d.grid.f_min, d.grid.f_max, d.min_cycles().unwrap()), (0.01, 0.28, 6.0));
        let h = PipelineConfig::high_frequency();
        assert_eq!((h.wavelet.beta, h.grid.levels, h.grid.f_max), (8.0, 140, 0.34));
        assert!((h.min_cycles().unwrap() - 4.0 * 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn validation_and_hash() {
        let mut c = PipelineConfig::standard();
        assert!(c.validate(1.0).is_ok());
        assert!(matches!(c.validate(2.0), Err(Error::InvalidGrid(_))));
        c.grid.levels = 2;
        assert!(matches!(c.validate(1.0), Err(Error::GridTooSmall(2))));
        let (a, b) = (PipelineConfig::standard(), PipelineConfig::high_frequency());
        assert_eq!(a.hash(), PipelineConfig::standard().hash());
        assert_ne!(a.hash(), b.hash());
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&text).unwrap(), a);
    }

    #[test]
    fn pure_tone_pipeline() {
        let t = 1024;
        let w = 2.0 * PI * 102.0 / t as f64;
        let x = MultivariateSeries::from_channels(
            &[(0..t).map(|i| (w * i as f64).cos()).collect(), (0..t).map(|i| (w * i as f64).sin()).collect()],
            1.0,
        )
        .unwrap();
        let out = run_pipeline(&PipelineConfig::standard(), &x).unwrap();
        assert_eq!(out.curves.len(), 1, "{:?}", out.diagnostics.ridges);
        assert_eq!(out.diagnostics.occupied_samples, t);
        let e = out.ellipses.unwrap();
        assert!((e.len() as f64 - 0.1 * t as f64).abs() <= 1.0);
        assert!(e.iter().all(|s| (s.params.a - 1.0).abs() < 1e-2 && (s.params.b - 1.0).abs() < 1e-2));
        let rms: f64 = out.residual.data.iter().map(|v| v * v).sum::<f64>() / (2 * t) as f64;
        assert!(rms.sqrt() < 0.02);
    }
}
