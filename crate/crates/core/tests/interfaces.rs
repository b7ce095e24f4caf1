//! File contracts read by downstream plotting scripts: headers, row layout,
//! and the JSON schema for the perturbation summary.

use std::fs;
use std::path::Path;

use nvlab::harness::{cmd_perturb, cmd_speed_profile, RunConfig};
use nvlab::instability::{
    perturbation_shape, scan_determinant, write_scan_csv, write_trace_csv, CurvePoint, DetMethod,
    MatchConfig, ScanWindow, ShapeOptions,
};
use serde_json::Value;
use tempfile::TempDir;

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/perturb_summary.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn header(bytes: &[u8]) -> Vec<String> {
    let mut rdr = csv::Reader::from_reader(bytes);
    rdr.headers().unwrap().iter().map(str::to_string).collect()
}

fn columns(bytes: &[u8]) -> Vec<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(bytes);
    rdr.records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn small_perturb(out: &Path, k: f64, gamma: f64, epsilon: f64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.out = out.to_path_buf();
    let p = &mut cfg.perturb;
    p.k = k;
    p.gamma = gamma;
    p.epsilon = epsilon;
    p.nx = 128;
    p.ny = 8;
    p.t_final = 0.5;
    p.fit_end = 0.5;
    p.sample_stride = 25;
    cfg
}

#[test]
fn scan_csv_is_a_full_k_major_lattice() {
    let window = ScanWindow {
        k_min: 0.5,
        k_max: 1.0,
        nk: 3,
        gamma_min: 0.0,
        gamma_max: 0.2,
        ngamma: 4,
    };
    let cells = scan_determinant(&window, &MatchConfig::default(), DetMethod::Bidirectional, Some(1)).unwrap();
    let mut buf = Vec::new();
    write_scan_csv(&mut buf, &cells).unwrap();
    assert_eq!(header(&buf), ["k", "gamma", "normalized_absD", "method", "status"]);
    let rows = columns(&buf);
    assert_eq!(rows.len(), 12);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], window.ks()[i / 4]);
        assert_eq!(r[1], window.gammas()[i % 4]);
        assert!(r[2].is_nan() || r[2] >= 0.0);
    }
}

#[test]
fn trace_csv_carries_arc_length_first() {
    let pts = [
        CurvePoint { s: 0.0, k: 1.0, gamma: 0.0, residual: 1e-12 },
        CurvePoint { s: 0.1, k: 0.95, gamma: 0.09, residual: 1e-10 },
    ];
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &pts).unwrap();
    assert_eq!(header(&buf), ["s", "k", "gamma", "residual"]);
    let rows = columns(&buf);
    assert_eq!(rows[1], [0.1, 0.95, 0.09, 1e-10]);
}

#[test]
fn shape_csv_at_the_known_point_overlays_closed_forms() {
    let shape = perturbation_shape(1.0, 0.0, &ShapeOptions::default()).unwrap();
    let mut buf = Vec::new();
    shape.write_csv(&mut buf).unwrap();
    assert_eq!(header(&buf), ["x", "f", "g", "h_imag"]);
    let rows = columns(&buf);
    assert!(rows.len() > 100);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let sech = |x: f64| 1.0 / x.cosh();
    for r in &rows {
        let x = r[0];
        assert!((r[1] - sech(x).powi(3)).abs() < 1e-6, "f at {x}");
        assert!((r[2] + sech(x) * x.tanh().powi(2)).abs() < 1e-6, "g at {x}");
    }
}

#[test]
fn speed_profile_csv_round_trips_at_full_precision() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = RunConfig::default();
    cfg.out = tmp.path().to_path_buf();
    cfg.speed_profile.samples = 7;
    let path = cmd_speed_profile(&cfg).unwrap();
    let bytes = fs::read(path).unwrap();
    assert_eq!(header(&bytes), ["alpha", "kappa", "speed"]);
    let rows = columns(&bytes);
    let alpha = 2.0 * std::f64::consts::PI * 3.0 / 7.0;
    assert_eq!(rows[3][0], alpha);
    assert_eq!(rows[3][1], nvlab::planar::kappa(alpha));
}

#[test]
fn perturb_outputs_match_their_contracts() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_perturb(tmp.path(), 1.0, 0.0, 0.01);
    let summary = cmd_perturb(&cfg).unwrap();
    let dir = tmp.path().join("perturb");

    let json: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let schema = schema();
    if let Err(e) = jsonschema::validate(&schema, &json) {
        panic!("summary.json rejected: {e}");
    }
    assert_eq!(json["nx"], 128);
    assert_eq!(json["gamma_est"].as_f64(), summary.gamma_est);

    let dev = fs::read(dir.join("deviation.csv")).unwrap();
    assert_eq!(header(&dev), ["t", "deviation_l2", "gamma_running"]);
    assert_eq!(columns(&dev).len(), 21);
    assert_eq!(header(&fs::read(dir.join("shape.csv")).unwrap()), ["x", "f", "g", "h_imag"]);
    let (u, t) = nvlab::snapshot::read(&dir.join("u_final.nvgrid")).unwrap();
    assert_eq!((u.grid().nx(), u.grid().ny()), (128, 8));
    assert!((t - 0.5).abs() < 1e-12);
}

#[test]
fn unperturbed_summary_uses_nulls_and_stays_valid() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_perturb(tmp.path(), 1.0, 0.0, 0.0);
    let summary = cmd_perturb(&cfg).unwrap();
    let json: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("perturb/summary.json")).unwrap()).unwrap();
    assert!(jsonschema::is_valid(&schema(), &json));
    if summary.gamma_est.is_none() {
        assert!(json["gamma_est"].is_null());
        assert!(json["relative_error"].is_null());
    }
}

#[test]
fn schema_rejects_incomplete_or_extended_summaries() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_perturb(tmp.path(), 1.0, 0.0, 0.01);
    let summary = cmd_perturb(&cfg).unwrap();
    let good = serde_json::to_value(&summary).unwrap();
    let schema = schema();
    assert!(jsonschema::is_valid(&schema, &good));

    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("gamma_expected");
    assert!(!jsonschema::is_valid(&schema, &missing));

    let mut extra = good.clone();
    extra["note"] = Value::from("x");
    assert!(!jsonschema::is_valid(&schema, &extra));

    let mut bad = good;
    bad["shape_correlation"] = Value::from(1.5);
    assert!(!jsonschema::is_valid(&schema, &bad));
}
