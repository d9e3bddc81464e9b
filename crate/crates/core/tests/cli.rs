use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ratlogit"))
}

struct Run {
    code: i32,
    out: PathBuf,
    manifest: Value,
    _dir: TempDir,
}

impl Run {
    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap()
    }
}

fn small_config(n: usize, eta: Value) -> Value {
    json!({
        "grid": { "n": n },
        "dynamic": { "kappa": 1.0, "eta": eta },
        "utility": { "a": 0.27, "b": 0.23 },
        "record_times": [1.0, 10.0],
    })
}

fn run_raw(args: &[&str], config_text: &str) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config_text).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(&args[..1])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(&args[1..])
        .status()
        .unwrap();
    let manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    Run { code: status.code().unwrap(), out, manifest, _dir: dir }
}

fn run(args: &[&str], config: &Value) -> Run {
    run_raw(args, &config.to_string())
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn simulate_records_initial_and_requested_times() {
    let r = run(&["simulate"], &small_config(40, json!(0.01)));
    assert_eq!(r.code, 0);
    assert_eq!(r.manifest["status"], "ok");
    assert_eq!(r.manifest["details"]["snapshots"], 3);
    let rows = csv_rows(&r.read("trajectory.csv"));
    assert_eq!(rows[0], ["time", "x_mid", "pdf"]);
    assert_eq!(rows.len(), 1 + 3 * 40);
    let times: Vec<f64> = rows[1..].iter().step_by(40).map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(times, [0.0, 1.0, 10.0]);
}

#[test]
fn stationary_writes_pdf_and_summary() {
    let r = run(&["stationary"], &small_config(50, json!(0.01)));
    assert_eq!(r.code, 0);
    let doc: Value = serde_json::from_str(&r.read("stationary.json")).unwrap();
    assert_eq!(doc["stationary"], true);
    let mean = doc["mean"].as_f64().unwrap();
    assert!(mean > 0.2 && mean < 0.45, "{mean}");
    let rows = csv_rows(&r.read("stationary_pdf.csv"));
    assert_eq!(rows[0], ["x_mid", "pdf"]);
    let total: f64 = rows[1..].iter().map(|r| r[1].parse::<f64>().unwrap() / 50.0).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_with_single_kappa_matches_stationary() {
    let cfg = small_config(50, json!(0.01));
    let single = run(&["stationary"], &cfg);
    let sweep = run(&["sweep-kappa", "--kappas", "1"], &cfg);
    assert_eq!(sweep.code, 0);
    let a = csv_rows(&single.read("stationary_pdf.csv"));
    let b = csv_rows(&sweep.read("sweep_kappa.csv"));
    assert_eq!(b[0], ["x_mid", "pdf_kappa_1"]);
    assert_eq!(a[1..], b[1..]);
}

#[test]
fn convergence_table_has_one_row_per_pair() {
    let r = run(&["convergence-eta", "--etas", "0.01,0.1", "--times", "0.5,1"], &small_config(30, json!("limit")));
    assert_eq!(r.code, 0, "{}", r.manifest);
    let rows = csv_rows(&r.read("convergence_eta.csv"));
    assert_eq!(rows[0], ["eta", "time", "error", "rate"]);
    assert_eq!(rows.len(), 1 + 4);
    // Grouped by time, largest η first; that row has no rate.
    let eta = |i: usize| rows[i][0].parse::<f64>().unwrap();
    assert_eq!([eta(1), eta(2), eta(3), eta(4)], [0.1, 0.01, 0.1, 0.01]);
    assert_eq!((rows[1][3].as_str(), rows[3][3].as_str()), ("", ""));
    assert!(!rows[2][3].is_empty() && !rows[4][3].is_empty());
}

#[test]
fn fit_reports_targets_and_errors() {
    let mut cfg = small_config(60, json!(0.01));
    cfg["fit"] = json!({ "free": { "a": [0.25, 0.29] }, "points": 2, "refinements": 0 });
    let r = run(&["fit"], &cfg);
    assert_eq!(r.code, 0, "{}", r.manifest);
    let doc: Value = serde_json::from_str(&r.read("fit.json")).unwrap();
    let target_mean = doc["target"]["mean"].as_f64().unwrap();
    let target_std = doc["target"]["std"].as_f64().unwrap();
    assert!((target_mean - 0.32471).abs() < 5e-6 && (target_std - 0.30352).abs() < 5e-6);
    assert_eq!(doc["evaluations"], 2);
    assert_eq!(doc["free"], json!(["a"]));
    let rm = doc["relative_error"]["mean"].as_f64().unwrap();
    let rs = doc["relative_error"]["std"].as_f64().unwrap();
    assert!((doc["objective"].as_f64().unwrap() - (rm * rm + rs * rs)).abs() < 1e-15);
    assert!(r.out.join("empirical_pdf.csv").exists());
}

#[test]
fn fit_with_missing_data_file_is_io_error() {
    let mut cfg = small_config(20, json!(0.01));
    cfg["fit"] = json!({ "free": { "a": [0.2, 0.3] } });
    let r = run(&["fit", "--data", "/nonexistent/catches.csv"], &cfg);
    assert_eq!(r.code, 3);
    assert_eq!(r.manifest["exit_code"], 3);
    assert!(r.manifest["error"].as_str().unwrap().contains("/nonexistent/catches.csv"));
}

#[test]
fn config_errors_exit_with_one() {
    let mut cfg = small_config(20, json!(0.01));
    cfg["dynamic"]["kappa"] = json!(1.5);
    cfg["utility"]["a"] = json!(-1.0);
    let r = run(&["stationary"], &cfg);
    assert_eq!(r.code, 1);
    assert_eq!(r.manifest["status"], "error");
    let msg = r.manifest["error"].as_str().unwrap();
    assert!(msg.contains("kappa") && msg.contains("utility.a"), "{msg}");

    let r = run_raw(&["simulate"], "{ not json");
    assert_eq!(r.code, 1);
}

#[test]
fn limit_with_kappa_zero_is_rejected() {
    let mut cfg = small_config(20, json!("limit"));
    cfg["dynamic"]["kappa"] = json!(0.0);
    let r = run(&["simulate"], &cfg);
    assert_eq!(r.code, 1);
}

#[test]
fn unfinished_stationary_run_exits_with_two() {
    let mut cfg = small_config(20, json!(0.01));
    cfg["dynamic"]["max_steps"] = json!(10);
    let r = run(&["stationary"], &cfg);
    assert_eq!(r.code, 2);
    assert_eq!(r.manifest["exit_code"], 2);
    // The partial result is still written.
    assert!(r.out.join("stationary_pdf.csv").exists());
}

#[test]
fn outputs_are_deterministic() {
    let cfg = small_config(40, json!(0.05));
    let a = run(&["simulate"], &cfg);
    let b = run(&["simulate"], &cfg);
    assert_eq!(a.read("trajectory.csv"), b.read("trajectory.csv"));
}

#[test]
fn missing_config_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["simulate", "--config", "/nonexistent.json", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(Path::new(&out).join("manifest.json").exists());
}
