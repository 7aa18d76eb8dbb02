use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavridge::ellipse::{ellipse_params, snapshot_times, EllipseSnapshot};
use wavridge::io;
use wavridge::pipeline::{run_pipeline, run_ridges, run_transform, PipelineConfig};
use wavridge::ridge::merge_overlaps;
use wavridge::signal::MultivariateSeries;
use wavridge::synth::{generate, SignalKind, SyntheticSpec};
use wavridge::{Complex64, Error, Result};

/// Multivariate wavelet ridge analysis.
#[derive(Parser)]
#[command(name = "wavridge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic signal as a channel CSV.
    Synth(SynthArgs),
    /// Compute the wavelet transform and optionally dump the cube.
    Transform(TransformArgs),
    /// Detect, chain and estimate ridges.
    Ridges(RidgesArgs),
    /// Full pipeline: ridges, residual, ellipses and diagnostics.
    Extract(ExtractArgs),
    /// Ellipse snapshots from a bivariate ridge file.
    Ellipse(EllipseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    PureOscillation,
    PhaseSignal,
    Chirp,
    GaussianEnvelope,
    ModulatedEllipse,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "chirp")]
    kind: Kind,
    /// Full JSON spec; overrides --kind and the other shape options.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// beta 3, gamma 3, 82 levels, 0.01..0.28 cycles per unit, 6 cycles
    Default,
    /// beta 8, gamma 3, 140 levels, 0.01..0.34 cycles per unit
    High,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Pipeline configuration JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    /// Lowest analysis frequency, cycles per time unit.
    #[arg(long)]
    fmin: Option<f64>,
    /// Highest analysis frequency, cycles per time unit.
    #[arg(long)]
    fmax: Option<f64>,
    #[arg(long)]
    min_cycles: Option<f64>,
    #[arg(long)]
    max_level_jump: Option<f64>,
    #[arg(long)]
    floor_ratio: Option<f64>,
    /// Mirror-pad the record before transforming.
    #[arg(long)]
    pad: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match (&self.config, self.preset) {
            (Some(p), _) => serde_json::from_reader(File::open(p)?)?,
            (None, Some(Preset::High)) => PipelineConfig::high_frequency(),
            _ => PipelineConfig::standard(),
        };
        if let Some(v) = self.beta {
            c.wavelet.beta = v;
            if self.min_cycles.is_none() && self.config.is_none() {
                c.chaining.min_cycles = None;
            }
        }
        if let Some(v) = self.gamma {
            c.wavelet.gamma = v;
            if self.min_cycles.is_none() && self.config.is_none() {
                c.chaining.min_cycles = None;
            }
        }
        if let Some(v) = self.levels {
            c.grid.levels = v;
        }
        if let Some(v) = self.fmin {
            c.grid.f_min = v;
        }
        if let Some(v) = self.fmax {
            c.grid.f_max = v;
        }
        if let Some(v) = self.min_cycles {
            c.chaining.min_cycles = Some(v);
        }
        if let Some(v) = self.max_level_jump {
            c.chaining.max_level_jump = v;
        }
        if let Some(v) = self.floor_ratio {
            c.chaining.floor_ratio = v;
        }
        c.pad |= self.pad;
        Ok(c)
    }
}

#[derive(Args)]
struct InputArgs {
    /// Channel CSV (time,ch1,...) or, with --trajectory, id,time,lat,lon.
    #[arg(long, short)]
    input: PathBuf,
    /// Treat the input as a lat/lon trajectory file.
    #[arg(long)]
    trajectory: bool,
    /// Trajectory id to analyze; the first record if absent.
    #[arg(long)]
    id: Option<String>,
}

impl InputArgs {
    fn load(&self) -> Result<MultivariateSeries> {
        if !self.trajectory {
            return io::read_channel_file(&self.input);
        }
        let recs = io::read_trajectory_csv(File::open(&self.input)?)?;
        let rec = match &self.id {
            Some(id) => recs
                .iter()
                .find(|r| &r.id == id)
                .ok_or_else(|| Error::InvalidInput(format!("no trajectory with id {id}")))?,
            None => &recs[0],
        };
        io::latlon_to_xy(rec)
    }
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Binary cube path; a JSON sidecar is written beside it.
    #[arg(long)]
    dump_cube: Option<PathBuf>,
    /// CSV of the joint modulus, one row per level.
    #[arg(long)]
    modulus: Option<PathBuf>,
}

#[derive(Args)]
struct RidgesArgs {
    /// Channel input; required unless --cube is given.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Cube dump written by `transform --dump-cube`.
    #[arg(long, conflicts_with = "input")]
    cube: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Keep overlapping curves separate.
    #[arg(long)]
    no_merge: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory receiving ridges.csv, residual.csv, ellipses.csv, diagnostics.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EllipseArgs {
    /// Merged bivariate ridge CSV.
    #[arg(long)]
    ridges: PathBuf,
    /// Residual CSV supplying ellipse centers; centers are zero without it.
    #[arg(long)]
    residual: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn default_spec(kind: Kind, samples: usize) -> SignalKind {
    let one = vec![Complex64::new(1.0, 0.0)];
    let span = samples as f64;
    match kind {
        Kind::PureOscillation => SignalKind::PureOscillation { omega: 0.5, coefficients: one },
        Kind::PhaseSignal => SignalKind::PhaseSignal {
            omega: 0.6,
            chirp: 1e-5,
            fm_depth: 0.05,
            fm_rate: 0.01,
            coefficients: one,
        },
        Kind::Chirp => SignalKind::Chirp { omega_start: 0.3, omega_end: 1.2, coefficients: one },
        Kind::GaussianEnvelope => SignalKind::GaussianEnvelope {
            omega: 0.8,
            chirp: 0.0,
            sigma: span / 8.0,
            center: None,
            coefficients: one,
        },
        Kind::ModulatedEllipse => SignalKind::ModulatedEllipse {
            omega_start: 0.5,
            omega_end: 0.3,
            a: [2.0, 1.5],
            b: [1.0, -0.5],
            theta: [0.0, 1.0],
        },
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => serde_json::from_reader(File::open(p)?)?,
        None => SyntheticSpec {
            samples: a.samples,
            dt: a.dt,
            noise_sigma: a.noise,
            seed: a.seed,
            signal: default_spec(a.kind, a.samples),
        },
    };
    let (x, _) = generate(&spec)?;
    io::write_channel_csv(create(&a.out)?, &x)
}

fn transform_cmd(a: TransformArgs) -> Result<()> {
    let x = a.input.load()?;
    let config = a.config.resolve()?;
    let cube = run_transform(&config, &x)?;
    if let Some(p) = &a.dump_cube {
        io::write_cube(p, &cube, Some(config.hash()))?;
    }
    if let Some(p) = &a.modulus {
        let m = cube.modulus();
        let mut out = create(p)?;
        writeln!(out, "# joint transform modulus; rows are levels, freq_cyc in cycles per time unit")?;
        let mut header = vec!["freq_cyc".to_string()];
        header.extend((0..x.samples()).map(|i| format!("{}", x.time(i))));
        writeln!(out, "{}", header.join(","))?;
        for (j, f) in cube.grid.frequencies.iter().enumerate() {
            let row: Vec<String> = m.row(j).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{:.16e},{}", f / (2.0 * std::f64::consts::PI), row.join(","))?;
        }
    }
    Ok(())
}

fn ridges_cmd(a: RidgesArgs) -> Result<()> {
    let mut config = a.config.resolve()?;
    let cube = match (&a.cube, &a.input) {
        (Some(p), _) => {
            let (cube, _) = io::read_cube(p)?;
            // the cube carries its own wavelet and grid
            config.wavelet.beta = cube.wavelet.beta();
            config.wavelet.gamma = cube.wavelet.gamma();
            cube
        }
        (None, Some(p)) => run_transform(&config, &io::read_channel_file(p)?)?,
        (None, None) => return Err(Error::InvalidInput("either --input or --cube is required".into())),
    };
    let raw = run_ridges(&config, &cube)?;
    let curves = if a.no_merge { raw } else { merge_overlaps(&raw, &cube.wavelet, cube.dt, cube.samples()) };
    let rows = io::ridge_rows(&curves, cube.dt, cube.time_origin);
    io::write_ridge_csv(create(&a.out)?, &rows, cube.channels())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let x = a.input.load()?;
    let config = a.config.resolve()?;
    let out = run_pipeline(&config, &x)?;
    let path = |name: &str, custom: &Option<String>| custom.as_ref().map_or_else(|| a.out_dir.join(name), PathBuf::from);
    let rows = io::ridge_rows(&out.curves, x.dt, x.time_origin);
    io::write_ridge_csv(create(&path("ridges.csv", &config.outputs.ridges))?, &rows, x.channels())?;
    io::write_channel_csv(create(&path("residual.csv", &config.outputs.residual))?, &out.residual)?;
    if let Some(e) = &out.ellipses {
        io::write_ellipse_csv(create(&path("ellipses.csv", &config.outputs.ellipses))?, e, x.dt, x.time_origin)?;
    }
    let mut diag = create(&path("diagnostics.json", &config.outputs.diagnostics))?;
    serde_json::to_writer_pretty(&mut diag, &out.diagnostics)?;
    writeln!(diag)?;
    log::info!("{} merged ridge(s) over {} samples", out.curves.len(), out.diagnostics.occupied_samples);
    Ok(())
}

fn ellipse_cmd(a: EllipseArgs) -> Result<()> {
    let (n, rows) = io::read_ridge_csv(File::open(&a.ridges)?)?;
    if n != 2 {
        return Err(Error::InvalidInput(format!("ellipses need a bivariate ridge file, got {n} channels")));
    }
    if rows.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::InvalidInput("ridge file has several rows per time; merge it first".into()));
    }
    let residual = a.residual.as_ref().map(|p| io::read_channel_file(p)).transpose()?;
    let dt = match (&residual, rows.len()) {
        (Some(r), _) => r.dt,
        (None, k) if k >= 2 => rows.windows(2).map(|w| w[1].t - w[0].t).fold(f64::INFINITY, f64::min),
        _ => 1.0,
    };
    let origin = residual.as_ref().map_or(rows.first().map_or(0.0, |r| r.t), |r| r.time_origin);
    // contiguous runs of samples form separate curves
    let mut snapshots = Vec::new();
    let mut start = 0;
    for k in 1..=rows.len() {
        let split = k == rows.len() || (rows[k].t - rows[k - 1].t) > 1.5 * dt;
        if !split {
            continue;
        }
        let run = &rows[start..k];
        let freq: Vec<f64> = run.iter().map(|r| r.omega_hat).collect();
        for i in snapshot_times(&freq, dt) {
            let r = &run[i];
            let t_index = ((r.t - origin) / dt).round() as usize;
            let center = match &residual {
                Some(res) if t_index < res.samples() => [res.data[[0, t_index]], res.data[[1, t_index]]],
                _ => [0.0, 0.0],
            };
            snapshots.push(EllipseSnapshot { t_index, center, params: ellipse_params(r.value[0], r.value[1]) });
        }
        start = k;
    }
    io::write_ellipse_csv(create(&a.out)?, &snapshots, dt, origin)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Transform(a) => transform_cmd(a),
        Command::Ridges(a) => ridges_cmd(a),
        Command::Extract(a) => extract(a),
        Command::Ellipse(a) => ellipse_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
