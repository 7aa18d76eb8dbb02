use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rustfft::FftPlanner;
use wavridge::signal::{analytic_signal, spectral_derivative, AnalyticSignal, MultivariateSeries};

const T: usize = 256;

fn series(rows: &[Vec<f64>]) -> MultivariateSeries {
    MultivariateSeries::from_channels(rows, 1.0).unwrap()
}

/// Random real channels, optionally limited to bins `1..T/2`.
fn channels(band_limited: bool) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let n_channels = 1usize..4;
    n_channels.prop_flat_map(move |n| {
        if band_limited {
            prop::collection::vec(prop::collection::vec((-1.0f64..1.0, 0.0..2.0 * PI), 1..T / 2), n)
                .prop_map(|chs| {
                    chs.into_iter()
                        .map(|coef| {
                            (0..T)
                                .map(|i| {
                                    coef.iter()
                                        .enumerate()
                                        .map(|(k, (a, p))| a * (2.0 * PI * (k + 1) as f64 * i as f64 / T as f64 + p).cos())
                                        .sum()
                                })
                                .collect()
                        })
                        .collect()
                })
                .boxed()
        } else {
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, T), n).boxed()
        }
    })
}

fn spectrum(row: &[Complex64]) -> Vec<Complex64> {
    let mut buf = row.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn max_rel_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let scale = a.iter().chain(b.iter()).map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_analytic(rows in channels(false)) {
        let z = analytic_signal(&series(&rows)).unwrap();
        for row in z.data.rows() {
            let spec = spectrum(&row.to_vec());
            let total: f64 = spec.iter().map(|c| c.norm()).sum();
            let negative: f64 = spec[T / 2 + 1..].iter().map(|c| c.norm()).sum();
            prop_assert!(negative <= 1e-10 * total.max(1e-300));
        }
    }

    #[test]
    fn real_part_reconstructs_band_limited_input(rows in channels(true)) {
        let x = series(&rows);
        let z = analytic_signal(&x).unwrap();
        let (demeaned, _) = x.demeaned();
        let err = (&z.real_part() - &demeaned).mapv(|v| v * v).sum().sqrt();
        let norm = demeaned.mapv(|v| v * v).sum().sqrt();
        prop_assert!(err <= 1e-12 * norm.max(1e-300));
    }

    #[test]
    fn linear(x in prop::collection::vec(-5.0f64..5.0, T), y in prop::collection::vec(-5.0f64..5.0, T), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let combined: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = analytic_signal(&series(&[combined])).unwrap().data;
        let rhs = analytic_signal(&series(&[x])).unwrap().data * a + analytic_signal(&series(&[y])).unwrap().data * b;
        prop_assert!(max_rel_diff(&lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn derivative_commutes_with_analytic_signal(rows in channels(true)) {
        let x = series(&rows);
        let z = analytic_signal(&x).unwrap();
        let dz = spectral_derivative(&z, 1).unwrap();
        // spectral derivative of the real input, then the analytic signal of that
        let real = AnalyticSignal { data: x.demeaned().0.mapv(|v| Complex64::new(v, 0.0)), dt: 1.0, means: vec![0.0; x.channels()] };
        let dx = spectral_derivative(&real, 1).unwrap().data.mapv(|c| c.re);
        let other = analytic_signal(&MultivariateSeries::new(dx, 1.0, 0.0).unwrap()).unwrap();
        prop_assert!(max_rel_diff(&dz.data, &other.data) <= 1e-10);
    }
}
