use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use cornerwalk_cli::{parse_config, run, Cli, RunManifest};

fn config(dir: &Path, args: &[&str]) -> cornerwalk_cli::RunConfig {
    let out = dir.to_str().unwrap();
    let argv = ["cornerwalk"].into_iter().chain(args.iter().copied()).chain(["--output-dir", out]);
    parse_config(Cli::try_parse_from(argv).unwrap()).unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> RunManifest {
    run(&config(dir, args)).unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn spectrum_writes_one_row_per_state() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_in(dir.path(), &["spectrum", "-m", "8"]);
    let rows = data_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 64);
    assert_eq!(rows[0][0], "1");
    let e: f64 = rows[0][1].parse().unwrap();
    assert!(e >= -std::f64::consts::PI);
    // 17 significant digits: one leading digit and sixteen after the point.
    let mantissa = rows[0][1].trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18);
    assert_eq!(data_rows(&dir.path().join("corner_modes.csv")).len(), 8);
    let names: Vec<_> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["spectrum.csv", "corner_modes.csv", "edge_modes.csv", "spectrum.json"]);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn invariant_reports_topological_index() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["invariant", "--k-grid", "20"]);
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("invariant.json")).unwrap()).unwrap();
    assert_eq!(v["nu"], 1);
    assert_eq!(v["N"], 20);
    for key in ["p_y_plus", "p_y_minus", "p_x_plus", "p_x_minus"] {
        assert!((v[key].as_f64().unwrap() - 0.5).abs() < 1e-6, "{key}");
    }
    assert_eq!(data_rows(&dir.path().join("wannier_x.csv")).len(), 20);

    run_in(dir.path(), &["invariant", "--k-grid", "20", "--j1", "1.5"]);
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("invariant.json")).unwrap()).unwrap();
    assert_eq!(v["nu"], 0);
}

#[test]
fn evolve_and_disorder_curves() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["evolve", "-m", "8", "--n-max", "20", "--snapshot-steps", "0,20"]);
    let curve = data_rows(&dir.path().join("curve.csv"));
    assert_eq!(curve.len(), 21);
    assert_eq!(curve[0][1].parse::<f64>().unwrap(), 1.0);
    let snap = data_rows(&dir.path().join("snapshot_0020.csv"));
    let total: f64 = snap.iter().flatten().map(|s| s.parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);

    run_in(dir.path(), &["disorder", "-m", "8", "--n-max", "20", "--realizations", "5", "--initial-site", "1,2"]);
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("disorder.json")).unwrap()).unwrap();
    assert_eq!(v["region"]["kind"], "edge_column");
    assert_eq!(v["realizations"], 5);
    let spread: Vec<f64> = data_rows(&dir.path().join("curve.csv")).iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(spread[20] > 0.0);
}

#[test]
fn sweep_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["sweep", "-m", "4", "--sweep", "0,1.5,4"]);
    let rows = data_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 4 * 16);
    assert_eq!(rows[16][1], "1");
    assert_eq!(rows[16][0].parse::<f64>().unwrap(), 0.5);

    let manifest = run_in(dir.path(), &["layout", "-m", "4"]);
    assert!(manifest.checks["layout_round_trip"] < 1e-12);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("layout.json")).unwrap()).unwrap();
    assert_eq!(v["meta"]["M"], 4);
    assert_eq!(v["layers"].as_array().unwrap().len(), 4);
}

#[test]
fn repeated_runs_hash_identically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["disorder", "-m", "8", "--n-max", "30", "--realizations", "8", "--seed", "11", "--threads", "2"];
    let first = run_in(a.path(), &args);
    let second = run_in(b.path(), &["disorder", "-m", "8", "--n-max", "30", "--realizations", "8", "--seed", "11"]);
    assert_eq!(first.files, second.files);
    let other = run_in(b.path(), &["disorder", "-m", "8", "--n-max", "30", "--realizations", "8", "--seed", "12"]);
    assert_ne!(first.files[0].sha256, other.files[0].sha256);
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_cornerwalk");
    let dir = tempfile::tempdir().unwrap();
    let ok = Process::new(bin).args(["layout", "-m", "4"]).env("CORNERWALK_OUTPUT_DIR", dir.path()).output().unwrap();
    assert!(ok.status.success());
    assert!(dir.path().join("layout.json").exists());

    for bad in [&["spectrum", "-m", "7"][..], &["disorder", "-w", "-1"], &[]] {
        let out = Process::new(bin).args(bad).env("CORNERWALK_OUTPUT_DIR", dir.path()).output().unwrap();
        assert!(!out.status.success(), "{bad:?}");
        assert!(!out.stderr.is_empty());
    }
}
