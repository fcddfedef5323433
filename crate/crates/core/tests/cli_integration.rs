//! End-to-end tests of the `kslope` binary: exit codes, output formats, and
//! byte-level determinism.

use std::io::Write;
use std::process::{Command, Output};

fn write_config(json: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(json.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslope"))
        .args(args)
        .output()
        .expect("binary runs")
}

const ANCHOR_COLLAPSE: &str = r#"{
  "degree": 2,
  "sections": [[[1, 0]], [[0, 0], [1, 0]], [[0, 0], [0, 0], [1, 0]]],
  "weights": [2, -1, -1],
  "label": "anchor-collapse"
}"#;

const TRIVIAL: &str = r#"{
  "degree": 2,
  "sections": [[[1, 0]], [[0, 0], [1, 0]], [[0, 0], [0, 0], [1, 0]]],
  "weights": [0, 0, 0],
  "label": "trivial"
}"#;

#[test]
fn verify_passes_on_worked_config_and_is_deterministic() {
    let f = write_config(ANCHOR_COLLAPSE);
    let path = f.path().to_str().unwrap();
    let first = run(&["verify", "--config", path]);
    assert_eq!(first.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["verdicts"]["overall_pass"], serde_json::Value::Bool(true));
    assert_eq!(report["schema_version"], 1);
    assert!((report["verdicts"]["nu"]["predicted"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((report["verdicts"]["futaki"]["predicted"].as_f64().unwrap() + 0.5).abs() < 1e-12);

    let second = run(&["verify", "--config", path]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout, "verify output not byte-identical");
}

#[test]
fn verify_passes_with_zero_slopes_on_trivial_weights() {
    let f = write_config(TRIVIAL);
    let out = run(&["verify", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["prediction"]["mabuchi_coefficient"].as_f64().unwrap(), 0.0);
    assert_eq!(report["prediction"]["futaki_coefficient"].as_f64().unwrap(), 0.0);
}

#[test]
fn weight_sum_error_exits_2_and_names_the_error() {
    let f = write_config(
        r#"{"degree":2,"sections":[[[1,0]],[[0,0],[1,0]],[[0,0],[0,0],[1,0]]],"weights":[2,-1,0]}"#,
    );
    let out = run(&["diagram", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("WeightSumNonzero"), "{stderr}");
}

#[test]
fn measure_below_design_t_min_exits_3_with_grid_unresolved() {
    let f = write_config(
        r#"{
            "degree": 2,
            "sections": [[[1,0]], [[0,0],[1,0]], [[0,0],[0,0],[1,0]]],
            "weights": [2,-1,-1],
            "t_schedule": [0.1, 0.01],
            "grid": {"design_t_min": 0.05}
        }"#,
    );
    let out = run(&["measure", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("GridUnresolved"), "{stdout}");
}

#[test]
fn measure_schedule_of_one_gives_zero_row() {
    let f = write_config(
        r#"{
            "degree": 2,
            "sections": [[[1,0]], [[0,0],[1,0]], [[0,0],[0,0],[1,0]]],
            "weights": [2,-1,-1],
            "t_schedule": [1.0]
        }"#,
    );
    let out = run(&["measure", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &rows.as_array().unwrap()[0];
    assert_eq!(row["nu"].as_f64().unwrap(), 0.0);
    assert_eq!(row["f0_direct"].as_f64().unwrap(), 0.0);
    assert!((row["volume"].as_f64().unwrap() - 2.0).abs() < 2e-5);
}

#[test]
fn measure_csv_has_contracted_header_and_rows() {
    let f = write_config(ANCHOR_COLLAPSE);
    let out = run(&[
        "measure",
        "--config",
        f.path().to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,functional,value,volume,wall_ms");
    // Default schedule has 5 samples, two functional rows each.
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert!(lines[1].contains(",nu,"));
    assert!(lines[2].contains(",futaki,"));
}

#[test]
fn predict_reports_slopes_on_stdout() {
    let f = write_config(ANCHOR_COLLAPSE);
    let out = run(&["predict", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let p: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((p["mabuchi_coefficient"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((p["futaki_coefficient"].as_f64().unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn diagram_dump_shows_vertices_and_identity() {
    let f = write_config(ANCHOR_COLLAPSE);
    let out = run(&["diagram", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("vertices: (0, 3) (1, 0)"), "{text}");
    assert!(text.contains("slopes: 3"), "{text}");
    assert!(text.contains("q_0 = 3"), "{text}");
    assert!(text.contains("equals q_0: true"), "{text}");
}

#[test]
fn diagram_dump_flags_trivial_weights() {
    let f = write_config(TRIVIAL);
    let out = run(&["diagram", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all diagrams trivial; predicted slopes 0"), "{text}");
}

#[test]
fn unconverged_coarse_run_exits_4_and_override_reports() {
    // A schedule far from the asymptotic regime cannot have stabilized
    // stepwise slopss; the verdict path must refuse it.
    let cfg = r#"{
        "degree": 2,
        "sections": [[[1,0]], [[0,0],[1,0]], [[0,0],[0,0],[1,0]]],
        "weights": [2,-1,-1],
        "t_schedule": [0.9, 0.8, 0.7, 0.6]
    }"#;
    let f = write_config(cfg);
    let out = run(&["verify", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("UnconvergedFit"), "{stderr}");

    let out = run(&[
        "verify",
        "--config",
        f.path().to_str().unwrap(),
        "--override-unconverged",
    ]);
    // Report is produced; the verdict itself fails at this range.
    assert_eq!(out.status.code(), Some(1));
}
