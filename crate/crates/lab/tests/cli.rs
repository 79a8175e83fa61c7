//! End-to-end runs of the `plunge` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn plunge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plunge")).args(args).output().expect("binary runs")
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("error JSON on stdout")
}

fn out_dir(d: &Path) -> &str {
    d.to_str().unwrap()
}

#[test]
fn malformed_domain_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("S.json");
    std::fs::write(&bad, r#"{"shape": "disk", "center": [0, 0], "radius": "#).unwrap();
    let out = plunge(&["spectrum", "--R", "4", "--domain", bad.to_str().unwrap(), "--out", out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let v = error_json(&out);
    assert_eq!(v["error"], "domain.parse");
    assert_eq!(v["exit_code"], 1);
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = plunge(&["cutoffs", "--R", "6", "--out", out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "validation");
    let out = plunge(&["cutoffs", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = plunge(&["sectors", "--R-list", "4,8", "--seed", "7", "--out", out_dir(d.path())]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    for f in ["sectors.json", "sectors.csv", "packet_norms.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let v: Value = serde_json::from_slice(&std::fs::read(a.path().join("sectors.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
    assert!(a.path().join("sectors.manifest.json").exists());
}

#[test]
fn floats_are_written_with_17_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = plunge(&["spectrum", "--R", "4", "--grid", "32", "--out", out_dir(dir.path())]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("spectrum.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let trace = v["result"]["runs"][0]["report"]["trace"].as_f64().unwrap();
    assert!(text.contains(&format!("{trace:.16e}")));
}

#[test]
fn report_refuses_mixed_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let d = out_dir(dir.path());
    assert!(plunge(&["cutoffs", "--R", "4", "--seed", "1", "--out", d]).status.success());
    assert!(plunge(&["sectors", "--R", "4", "--seed", "1", "--out", d]).status.success());
    let ok = plunge(&["report", "--out", d]);
    assert!(ok.status.success());
    let rep: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(rep["criteria"].as_array().unwrap().iter().any(|c| c["criterion"] == 1));

    assert!(plunge(&["sectors", "--R", "4", "--seed", "2", "--out", d]).status.success());
    let mixed = plunge(&["report", "--out", d]);
    assert_eq!(mixed.status.code(), Some(1));
    assert_eq!(error_json(&mixed)["error"], "validation");
}

#[test]
fn unreliable_frame_estimate_exits_two() {
    // stopping the levels at j = −1 leaves most boundary energy unresolved
    let dir = tempfile::tempdir().unwrap();
    let out = plunge(&[
        "frame", "--R", "4", "--s", "2", "--trials", "32", "--j-min", "-1", "--grid", "128", "--out", out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"numerical\""));
    assert!(dir.path().join("frame.json").exists());
}
