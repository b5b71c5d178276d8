use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn randhom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randhom")).args(args).output().expect("binary runs")
}

fn run_dir(out: &Output) -> PathBuf {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn ball_oracle_extrapolates_near_analytic_capacity() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&randhom(&["capacity", "--preset", "ball-oracle", "--out", tmp.path().to_str().unwrap()]));
    let caps = csv_column(&dir.join("capacity.csv"), "cap");
    let dxs = csv_column(&dir.join("capacity.csv"), "dx");
    assert_eq!(dxs.last().unwrap().parse::<f64>().unwrap(), 0.0);
    let extrapolated: f64 = caps.last().unwrap().parse().unwrap();
    let exact = 4.0 * std::f64::consts::PI / (1.0 / 0.1 - 1.0 / 1.0);
    assert!((extrapolated / exact - 1.0).abs() <= 0.10, "{extrapolated} vs {exact}");
}

#[test]
fn periodic_ergodic_has_zero_spread() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&randhom(&["ergodic", "--preset", "periodic-ergodic", "--out", tmp.path().to_str().unwrap()]));
    let spread = csv_column(&dir.join("levels.csv"), "rel_std");
    assert_eq!(spread.len(), 3);
    assert!(spread.iter().all(|s| s.parse::<f64>().unwrap() == 0.0), "{spread:?}");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    for (cmd, preset, file) in [
        ("ergodic", "boolean-ergodic", "rows.csv"),
        ("capacity", "ball-oracle", "capacity.csv"),
        ("geometry", "boolean-geometry", "mask.txt"),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let da = run_dir(&randhom(&[cmd, "--preset", preset, "--seed", "9", "--threads", "1", "--out", a.path().to_str().unwrap()]));
        let db = run_dir(&randhom(&[cmd, "--preset", preset, "--seed", "9", "--threads", "2", "--out", b.path().to_str().unwrap()]));
        assert_eq!(da.file_name(), db.file_name(), "{preset}: run directory is keyed by inputs");
        assert_eq!(std::fs::read(da.join(file)).unwrap(), std::fs::read(db.join(file)).unwrap(), "{preset}");
    }
}

#[test]
fn seed_changes_output_directory_and_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let a = run_dir(&randhom(&["geometry", "--preset", "boolean-geometry", "--seed", "1", "--out", out]));
    let b = run_dir(&randhom(&["geometry", "--preset", "boolean-geometry", "--seed", "2", "--out", out]));
    assert_ne!(a, b);
    assert_ne!(std::fs::read(a.join("points.txt")).unwrap(), std::fs::read(b.join("points.txt")).unwrap());
    assert_eq!(json(&a.join("record.json"))["seed"], 1);
}

#[test]
fn record_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let dir = run_dir(&randhom(&["solve", "--preset", "boolean-solve", "--set", "solve.reaction=2", "--out", out]));
    let record = json(&dir.join("record.json"));
    assert_eq!(record["format_version"], 1);
    assert_eq!(record["status"], "ok");
    assert_eq!(record["config"]["solve"]["reaction"], 2.0);
    assert!(record["input_hash"].as_str().unwrap().starts_with(dir.file_name().unwrap().to_str().unwrap()));

    let resolved = tmp.path().join("resolved.json");
    std::fs::write(&resolved, serde_json::to_string(&record["config"]).unwrap()).unwrap();
    let v = randhom(&["validate", "--config", resolved.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stderr(&v));
    let again = run_dir(&randhom(&["solve", "--config", resolved.to_str().unwrap(), "--out", out]));
    assert_eq!(again, dir);
    assert_eq!(json(&again.join("record.json"))["config"], record["config"]);
}

#[test]
fn geometry_mask_parses_back() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&randhom(&["geometry", "--preset", "boolean-geometry", "--out", tmp.path().to_str().unwrap()]));
    let mask = randhom::random_geometry::PerforatedMask::from_text(&std::fs::read_to_string(dir.join("mask.txt")).unwrap()).unwrap();
    let stats = &json(&dir.join("stats.json"))["stats"];
    assert_eq!(stats["absorbers"].as_u64().unwrap() as usize, mask.absorbers.len());
    assert!(stats["components"].as_u64().unwrap() > 0);
    assert!(stats["min_pairwise_distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_reads_a_source_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let first = run_dir(&randhom(&["solve", "--preset", "boolean-solve", "--out", out]));
    let field = first.join("solution.field");
    let set = format!("solve.source={{\"file\":\"{}\"}}", field.display());
    let second = run_dir(&randhom(&["solve", "--preset", "boolean-solve", "--set", &set, "--out", out]));
    let report = json(&second.join("solve.json"));
    assert!(report["source_norm"].as_f64().unwrap() > 0.0);

    // same file on a coarser grid is rejected
    let coarse = randhom(&["solve", "--preset", "boolean-solve", "--set", &set, "--set", "solve.geometry.dx=0.0625", "--out", out]);
    assert_eq!(coarse.status.code(), Some(2), "{}", stderr(&coarse));
}

#[test]
fn schema_violations_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1,\n\"command\": \"geometry\",\n\"geometry\": {\"modle\": \"boolean\"}}").unwrap();
    let out = randhom(&["geometry", "--config", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("modle") && err.contains("line 3"), "{err}");

    let unknown = randhom(&["sweep", "--preset", "boolean-sweep", "--set", "sweep.bogus=1"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("bogus"));

    let wrong = randhom(&["sweep", "--preset", "ball-oracle"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = randhom(&["solve", "--preset", "boolean-solve", "--set", "solve.tol=1e-300", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let dir = std::fs::read_dir(tmp.path()).unwrap().next().unwrap().unwrap().path();
    let record = json(&dir.join("record.json"));
    assert_eq!(record["status"], "failed");
    assert!(record["error"].as_str().unwrap().contains("solver failure"));
}

fn diagnostics(args: &[&str]) -> (Option<i32>, Vec<String>) {
    let out = randhom(args);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let list = v["diagnostics"].as_array().unwrap().iter().map(|d| d.as_str().unwrap().to_string()).collect();
    (out.status.code(), list)
}

#[test]
fn presets_validate_cleanly() {
    let listed = randhom(&["presets"]);
    let names: Vec<String> = String::from_utf8(listed.stdout).unwrap().lines().map(String::from).collect();
    assert!(names.len() >= 6);
    for name in &names {
        let (code, list) = diagnostics(&["validate", "--preset", name]);
        assert_eq!(code, Some(0), "{name}: {list:?}");
        assert!(list.is_empty(), "{name}: {list:?}");
    }
}

#[test]
fn validate_reports_scale_ordering_and_gamma() {
    let (code, list) = diagnostics(&[
        "validate",
        "--preset",
        "boolean-sweep",
        "--set",
        "sweep.hs=[0.25,0.125]",
        "--set",
        "sweep.epsilons=[0.5,0.25,0.125]",
    ]);
    assert_eq!(code, Some(2));
    assert!(list.iter().any(|d| d.contains("eps << h")), "{list:?}");

    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tensor.json");
    std::fs::write(
        &cfg,
        r#"{"format_version": 1, "command": "capacity", "capacity": {
            "mode": "tensor", "center": [0.5, 0.5, 0.5], "h": 0.125, "gamma": 2.5,
            "geometry": {"model": "boolean", "domain": {"dim": 3, "lower": [0, 0, 0], "upper": [1, 1, 1]},
                "intensity": 1.0, "geometry": {"ball_radius": {"rule": "fixed", "radius": 0.2}},
                "epsilon": 0.125, "dx": 0.03125, "seed": 1}}}"#,
    )
    .unwrap();
    let (code, list) = diagnostics(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, Some(2));
    // both problems at once
    assert!(list.iter().any(|d| d.contains("(0, 2)")), "{list:?}");
    assert!(list.iter().any(|d| d.contains("eps << h")), "{list:?}");
}

#[test]
fn small_sweep_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&randhom(&[
        "sweep",
        "--preset",
        "boolean-sweep",
        "--set",
        "sweep.grid.dx=0.03125",
        "--set",
        "sweep.epsilons=[0.125,0.0625,0.03125]",
        "--set",
        "sweep.replicas=1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]));
    let rows = csv_column(&dir.join("rows.csv"), "l2_error");
    assert_eq!(rows.len(), 3);
    let plot = std::fs::read_to_string(dir.join("l2_error.dat")).unwrap();
    assert_eq!(plot.lines().filter(|l| !l.starts_with('#')).count(), 3);
    let summary = json(&dir.join("summary.json"));
    assert!(summary["summary"]["c"].as_f64().unwrap() > 0.0);
    let record = json(&dir.join("record.json"));
    assert!(record["outputs"].as_array().unwrap().iter().any(|o| o == "rows.csv"));
}

#[test]
fn density_check_and_strange_capacity_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let dir = run_dir(&randhom(&["density-check", "--preset", "rcm-density", "--out", out]));
    let d = &json(&dir.join("density.json"))["density"];
    assert!(d["min_ratio"].as_f64().unwrap() <= d["max_ratio"].as_f64().unwrap());

    let preset: Value = serde_json::from_str(include_str!("../presets/boolean-sweep.json")).unwrap();
    let mut spec = preset["sweep"].clone();
    spec["grid"]["dx"] = 0.03125.into();
    spec["replicas"] = 1.into();
    let cfg = serde_json::json!({
        "format_version": 1,
        "command": "capacity",
        "capacity": { "mode": "strange", "spec": spec },
    });
    let path = tmp.path().join("strange.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let dir = run_dir(&randhom(&["capacity", "--config", path.to_str().unwrap(), "--out", out]));
    let mut r = csv::Reader::from_path(dir.join("capacity.csv")).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    for col in ["h", "eps", "seed", "cap", "cap_per_volume", "iterations", "dx"] {
        assert!(headers.iter().any(|h| h == col), "{headers:?}");
    }
    assert_eq!(r.records().count(), 2 * 3);
}
