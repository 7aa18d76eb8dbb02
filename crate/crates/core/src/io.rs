//! File formats: channel and trajectory CSV input, ridge/residual/ellipse
//! CSV output, and binary transform-cube dumps with a JSON sidecar.
//!
//! Frequencies in files are radian per time unit unless the column name
//! says otherwise; `freq_cyc = freq_rad / 2 pi`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cwt::{ScaleGrid, TransformCube};
use crate::ellipse::EllipseSnapshot;
use crate::error::{Error, Result};
use crate::morse::MorseWavelet;
use crate::ridge::RidgeCurve;
use crate::signal::MultivariateSeries;

pub const FORMAT_VERSION: u32 = 1;

const EARTH_RADIUS_KM: f64 = 6371.0;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("cannot parse {what} value {field:?}")))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

/// Uniform sample interval of `times`, rejecting non-increasing or
/// non-uniform grids (tolerance `1e-6 dt`).
pub fn infer_dt(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (k, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(format!("time is not strictly increasing at row {}", k + 2)));
        }
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::InvalidInput(format!(
                "non-uniform sampling at row {}: step {} vs mean {dt}",
                k + 2,
                w[1] - w[0]
            )));
        }
    }
    Ok(dt)
}

/// Reads `time,ch1,...,chN`.
pub fn read_channel_csv<R: Read>(input: R) -> Result<MultivariateSeries> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("time") {
        return Err(Error::InvalidInput("channel CSV header must be time,ch1,...,chN".into()));
    }
    let n = headers.len() - 1;
    let mut times = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); n];
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != n + 1 {
            return Err(Error::InvalidInput(format!("row has {} fields, expected {}", rec.len(), n + 1)));
        }
        times.push(parse(&rec[0], "time")?);
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse(&rec[c + 1], "channel")?);
        }
    }
    if times.is_empty() {
        return Err(Error::InvalidInput("empty input".into()));
    }
    let dt = infer_dt(&times)?;
    let t = times.len();
    let data = Array2::from_shape_vec((n, t), cols.into_iter().flatten().collect()).map_err(|e| Error::Shape(e.to_string()))?;
    MultivariateSeries::new(data, dt, times[0])
}

pub fn read_channel_file(path: &Path) -> Result<MultivariateSeries> {
    read_channel_csv(BufReader::new(File::open(path)?))
}

/// Writes `time,ch1,...,chN` with a version comment line.
pub fn write_channel_csv<W: Write>(mut out: W, series: &MultivariateSeries) -> Result<()> {
    writeln!(out, "# wavridge channels v{FORMAT_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend((1..=series.channels()).map(|k| format!("ch{k}")));
    w.write_record(&header)?;
    for i in 0..series.samples() {
        let mut row = vec![num(series.time(i))];
        row.extend(series.data.column(i).iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub id: String,
    pub time: Vec<f64>,
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
}

/// Reads `id,time,lat,lon`, grouping rows by id in order of first appearance.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let expected = ["id", "time", "lat", "lon"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(Error::InvalidInput("trajectory CSV header must be id,time,lat,lon".into()));
    }
    let mut out: Vec<TrajectoryRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec[0].to_string();
        let idx = match out.iter().position(|r| r.id == id) {
            Some(k) => k,
            None => {
                out.push(TrajectoryRecord { id, time: Vec::new(), lat: Vec::new(), lon: Vec::new() });
                out.len() - 1
            }
        };
        let r = &mut out[idx];
        r.time.push(parse(&rec[1], "time")?);
        r.lat.push(parse(&rec[2], "lat")?);
        r.lon.push(parse(&rec[3], "lon")?);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty input".into()));
    }
    Ok(out)
}

/// Local tangent-plane coordinates in km about the mean position.
pub fn latlon_to_xy(traj: &TrajectoryRecord) -> Result<MultivariateSeries> {
    if traj.lat.iter().any(|l| l.abs() > 90.0) {
        return Err(Error::InvalidInput(format!("latitude outside [-90, 90] in record {}", traj.id)));
    }
    let dt = infer_dt(&traj.time)?;
    let t = traj.time.len() as f64;
    let lat0 = traj.lat.iter().sum::<f64>() / t;
    let lon0 = traj.lon.iter().sum::<f64>() / t;
    let span = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min);
    if span(&traj.lat) > 10.0 || span(&traj.lon) > 10.0 {
        log::warn!("record {} spans more than 10 degrees; tangent-plane projection is approximate", traj.id);
    }
    let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let c = lat0.to_radians().cos();
    let x: Vec<f64> = traj.lon.iter().map(|l| k * c * (l - lon0)).collect();
    let y: Vec<f64> = traj.lat.iter().map(|l| k * (l - lat0)).collect();
    let mut s = MultivariateSeries::from_channels(&[x, y], dt)?;
    s.time_origin = traj.time[0];
    Ok(s)
}

pub fn ridge_header(channels: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "scale", "freq_rad", "freq_cyc", "edge"].iter().map(|s| s.to_string()).collect();
    for k in 1..=channels {
        h.push(format!("re_{k}"));
        h.push(format!("im_{k}"));
    }
    h.push("omega_hat".into());
    h.push("xi_hat".into());
    for k in 1..=channels {
        h.push(format!("bias_re_{k}"));
        h.push(format!("bias_im_{k}"));
    }
    h
}

/// One row of the ridge file.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeRow {
    pub t: f64,
    pub scale: f64,
    pub freq_rad: f64,
    pub edge: bool,
    pub value: Vec<Complex64>,
    pub omega_hat: f64,
    pub xi_hat: f64,
    pub bias: Vec<Complex64>,
}

/// Rows of `curves`, sorted by time.
pub fn ridge_rows(curves: &[RidgeCurve], dt: f64, time_origin: f64) -> Vec<RidgeRow> {
    let mut rows: Vec<RidgeRow> = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().enumerate().map(move |(k, p)| RidgeRow {
                t: time_origin + p.t_index as f64 * dt,
                scale: p.scale,
                freq_rad: p.frequency,
                edge: p.edge_flag,
                value: c.signal.column(k).to_vec(),
                omega_hat: c.frequency[k],
                xi_hat: c.curvature[k],
                bias: c.bias.column(k).to_vec(),
            })
        })
        .collect();
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.scale.total_cmp(&b.scale)));
    rows
}

pub fn write_ridge_csv<W: Write>(mut out: W, rows: &[RidgeRow], channels: usize) -> Result<()> {
    writeln!(
        out,
        "# wavridge ridges v{FORMAT_VERSION}; freq_rad and omega_hat in radian per time unit, freq_cyc = freq_rad / 2pi"
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ridge_header(channels))?;
    for r in rows {
        let mut row = vec![num(r.t), num(r.scale), num(r.freq_rad), num(r.freq_rad / (2.0 * std::f64::consts::PI))];
        row.push(u8::from(r.edge).to_string());
        for z in &r.value {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        row.push(num(r.omega_hat));
        row.push(num(r.xi_hat));
        for z in &r.bias {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a ridge file; returns the channel count and rows.
pub fn read_ridge_csv<R: Read>(input: R) -> Result<(usize, Vec<RidgeRow>)> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() < 9 || (headers.len() - 7) % 4 != 0 {
        return Err(Error::InvalidInput("unrecognized ridge CSV header".into()));
    }
    let n = (headers.len() - 7) / 4;
    let expected = ridge_header(n);
    if headers.iter().zip(&expected).any(|(h, e)| h != e) {
        return Err(Error::InvalidInput("unrecognized ridge CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |k: usize| parse(&rec[k], &expected[k]);
        let pair = |k: usize| -> Result<Complex64> { Ok(Complex64::new(f(k)?, f(k + 1)?)) };
        let value = (0..n).map(|c| pair(5 + 2 * c)).collect::<Result<Vec<_>>>()?;
        let base = 5 + 2 * n;
        let bias = (0..n).map(|c| pair(base + 2 + 2 * c)).collect::<Result<Vec<_>>>()?;
        rows.push(RidgeRow {
            t: f(0)?,
            scale: f(1)?,
            freq_rad: f(2)?,
            edge: rec[4].trim() == "1",
            value,
            omega_hat: f(base)?,
            xi_hat: f(base + 1)?,
            bias,
        });
    }
    Ok((n, rows))
}

pub fn write_ellipse_csv<W: Write>(mut out: W, snapshots: &[EllipseSnapshot], dt: f64, time_origin: f64) -> Result<()> {
    writeln!(out, "# wavridge ellipses v{FORMAT_VERSION}; theta and phi in radians")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "cx", "cy", "a", "b", "theta", "phi"])?;
    for s in snapshots {
        let p = &s.params;
        w.write_record([
            num(time_origin + s.t_index as f64 * dt),
            num(s.center[0]),
            num(s.center[1]),
            num(p.a),
            num(p.b),
            num(p.theta),
            num(p.phi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON description of a binary cube dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeSidecar {
    pub format_version: u32,
    /// `[N, S, T]`
    pub shape: [usize; 3],
    /// Arrays stored back to back in the binary file, in this order.
    pub arrays: Vec<String>,
    pub layout: String,
    pub wavelet: MorseWavelet,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub time_origin: f64,
    pub edge_width: Vec<usize>,
    pub padded: bool,
    #[serde(default)]
    pub config_hash: Option<String>,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `path` (binary) and `path` with a `.json` extension (sidecar).
pub fn write_cube(path: &Path, cube: &TransformCube, config_hash: Option<String>) -> Result<()> {
    let mut arrays = vec![("w", &cube.w)];
    if let Some(a) = &cube.wt {
        arrays.push(("wt", a));
    }
    if let Some(a) = &cube.wtt {
        arrays.push(("wtt", a));
    }
    let mut out = BufWriter::new(File::create(path)?);
    for (_, a) in &arrays {
        for z in a.iter() {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    let (n, s, t) = cube.w.dim();
    let sidecar = CubeSidecar {
        format_version: FORMAT_VERSION,
        shape: [n, s, t],
        arrays: arrays.iter().map(|(k, _)| k.to_string()).collect(),
        layout: "little-endian f64 (re, im) pairs, channel-major then scale then time".into(),
        wavelet: cube.wavelet,
        grid: cube.grid.clone(),
        dt: cube.dt,
        time_origin: cube.time_origin,
        edge_width: cube.edge_width.clone(),
        padded: cube.padded,
        config_hash,
    };
    let json = File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(BufWriter::new(json), &sidecar)?;
    Ok(())
}

pub fn read_cube(path: &Path) -> Result<(TransformCube, CubeSidecar)> {
    let sidecar: CubeSidecar = serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    let [n, s, t] = sidecar.shape;
    let count = n * s * t;
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() != 16 * count * sidecar.arrays.len() {
        return Err(Error::InvalidInput(format!(
            "cube file has {} bytes, sidecar implies {}",
            bytes.len(),
            16 * count * sidecar.arrays.len()
        )));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("slice of eight bytes"));
    let mut loaded = std::collections::HashMap::new();
    for (a, name) in sidecar.arrays.iter().enumerate() {
        let vals: Vec<Complex64> = (0..count)
            .map(|k| {
                let b = 2 * (a * count + k);
                Complex64::new(f(b), f(b + 1))
            })
            .collect();
        let arr = Array3::from_shape_vec((n, s, t), vals).map_err(|e| Error::Shape(e.to_string()))?;
        loaded.insert(name.as_str(), arr);
    }
    let w = loaded.remove("w").ok_or_else(|| Error::InvalidInput("cube dump lacks w".into()))?;
    let cube = TransformCube {
        w,
        wt: loaded.remove("wt"),
        wtt: loaded.remove("wtt"),
        grid: sidecar.grid.clone(),
        wavelet: sidecar.wavelet,
        dt: sidecar.dt,
        time_origin: sidecar.time_origin,
        edge_width: sidecar.edge_width.clone(),
        padded: sidecar.padded,
    };
    Ok((cube, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_csv_roundtrip_is_lossless() {
        let x = MultivariateSeries::new(
            Array2::from_shape_fn((2, 50), |(c, i)| ((c + 1) as f64 * 0.37 * i as f64).sin() / 3.0),
            0.1,
            12.5,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_channel_csv(&mut buf, &x).unwrap();
        let y = read_channel_csv(buf.as_slice()).unwrap();
        assert_eq!(y.data, x.data);
        assert!((y.dt - 0.1).abs() < 1e-12 && y.time_origin == 12.5);
    }

    #[test]
    fn rejects_bad_time_grids() {
        let bad = "time,ch1\n0,1\n1,2\n3,1\n";
        assert!(matches!(read_channel_csv(bad.as_bytes()), Err(Error::InvalidInput(_))));
        let back = "time,ch1\n0,1\n1,2\n0.5,1\n";
        assert!(read_channel_csv(back.as_bytes()).is_err());
        assert!(read_channel_csv("time,ch1\n".as_bytes()).is_err());
        assert!(read_channel_csv("t,x\n0,1\n1,2\n".as_bytes()).is_err());
        assert!(matches!(read_channel_csv("time,ch1\n0,1\n1,nan\n".as_bytes()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn tangent_plane_projection() {
        let r = TrajectoryRecord {
            id: "a".into(),
            time: vec![0.0, 1.0, 2.0],
            lat: vec![-0.5, 0.0, 0.5],
            lon: vec![10.0, 10.0, 10.0],
        };
        let s = latlon_to_xy(&r).unwrap();
        assert!((s.data[[1, 2]] - s.data[[1, 0]] - 111.19).abs() < 5e-3);
        assert!(s.data.row(0).iter().all(|v| v.abs() < 1e-12));
        let r60 = TrajectoryRecord { id: "b".into(), time: vec![0.0, 1.0], lat: vec![60.0, 60.0], lon: vec![0.0, 1.0] };
        let s = latlon_to_xy(&r60).unwrap();
        assert!((s.data[[0, 1]] - s.data[[0, 0]] - 55.60).abs() < 5e-3);
        let still = TrajectoryRecord { id: "c".into(), time: vec![0.0, 1.0], lat: vec![5.0; 2], lon: vec![7.0; 2] };
        assert!(latlon_to_xy(&still).unwrap().data.iter().all(|&v| v == 0.0));
        let bad = TrajectoryRecord { lat: vec![91.0, 0.0], ..still };
        assert!(latlon_to_xy(&bad).is_err());
    }

    #[test]
    fn trajectory_csv_groups_by_id() {
        let text = "id,time,lat,lon\na,0,1,2\nb,0,3,4\na,1,1.5,2\n";
        let recs = read_trajectory_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].lat, vec![1.0, 1.5]);
    }

    #[test]
    fn ridge_csv_roundtrip() {
        let rows = vec![RidgeRow {
            t: 3.0,
            scale: 2.5,
            freq_rad: 0.4,
            edge: true,
            value: vec![Complex64::new(1.0 / 3.0, -2.0), Complex64::new(0.1, 0.2)],
            omega_hat: 0.41,
            xi_hat: 1e-5,
            bias: vec![Complex64::new(1e-7, 0.0), Complex64::new(0.0, -1e-9)],
        }];
        let mut buf = Vec::new();
        write_ridge_csv(&mut buf, &rows, 2).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("t,scale,freq_rad,freq_cyc,edge,re_1,im_1,re_2,im_2,omega_hat,xi_hat,bias_re_1"));
        assert_eq!(read_ridge_csv(buf.as_slice()).unwrap(), (2, rows));
    }
}
