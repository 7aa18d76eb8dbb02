use wavridge::pipeline::{run_pipeline, PipelineConfig};
use wavridge::synth::{float_like, float_like_trajectory, FloatLikeParams};

#[test]
fn default_record_has_one_dominant_curve() {
    let x = float_like_trajectory(1).unwrap();
    let out = run_pipeline(&PipelineConfig::standard(), &x).unwrap();
    let longest = out.curves.iter().map(|c| c.len()).max().unwrap_or(0);
    assert!(longest as f64 >= 0.6 * x.samples() as f64, "longest curve {longest}");
}

#[test]
fn no_oscillation_means_no_ridges() {
    let (x, _) = float_like(&FloatLikeParams { amplitude: 0.0, ..FloatLikeParams::default() }).unwrap();
    let out = run_pipeline(&PipelineConfig::standard(), &x).unwrap();
    assert!(out.curves.is_empty(), "{} curves retained", out.curves.len());
}

#[test]
fn doubling_the_amplitude_doubles_the_estimate() {
    let mean_norm = |amplitude: f64| {
        let (x, _) = float_like(&FloatLikeParams { amplitude, ..FloatLikeParams::default() }).unwrap();
        let out = run_pipeline(&PipelineConfig::standard(), &x).unwrap();
        let c = out.curves.iter().max_by_key(|c| c.len()).unwrap();
        let norms: Vec<f64> = (0..c.len())
            .filter(|&k| !c.points[k].edge_flag)
            .map(|k| c.signal.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        norms.iter().sum::<f64>() / norms.len() as f64
    };
    let ratio = mean_norm(40.0) / mean_norm(20.0);
    assert!((ratio - 2.0).abs() <= 0.1, "ratio {ratio}");
}

#[test]
fn pipeline_is_deterministic() {
    let x = float_like_trajectory(3).unwrap();
    let config = PipelineConfig::standard();
    let a = run_pipeline(&config, &x).unwrap();
    let b = run_pipeline(&config, &x).unwrap();
    assert_eq!(a.curves, b.curves);
    assert_eq!(a.residual, b.residual);
    assert_eq!(serde_json::to_string(&a.diagnostics).unwrap(), serde_json::to_string(&b.diagnostics).unwrap());
}
