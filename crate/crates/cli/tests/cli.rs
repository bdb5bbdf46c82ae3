use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn dccm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dccm")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let cert = dir.join("cert.json");
    let out = dccm(&["synth", "--system", s(&data("cstr.json")), "--degree", "2", "--beta", "0.1", "--out", s(&cert)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("margin "));
    cert
}

#[test]
fn synth_simulate_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cert = synth(dir.path());
    let (csv, svg) = (dir.path().join("traj.csv"), dir.path().join("traj.svg"));
    let out = dccm(&[
        "simulate", "--system", s(&data("cstr.json")), "--cert", s(&cert), "--schedule", s(&data("refs.json")),
        "--x0", "0,0", "--steps", "100", "--out", s(&csv), "--plot", s(&svg),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,x1,x2,u1,x1_star,x2_star,u1_star,energy,length\n"));
    assert_eq!(text.lines().count(), 101);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("geodesic length"));

    let report = dir.path().join("report.json");
    let out = dccm(&[
        "verify", "--system", s(&data("cstr.json")), "--cert", s(&cert), "--box", "-0.5:1.5,-0.5:1.5", "--ubox",
        "-0.2:0.2", "--res", "21", "--out", s(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(&report).unwrap();
    assert!(json.contains("\"pass\": true"));
    assert!(json.contains("\"points\": 9261"));
}

#[test]
fn simulation_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cert = synth(dir.path());
    let mut texts = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = dir.path().join(name);
        let out = dccm(&[
            "simulate", "--system", s(&data("cstr.json")), "--cert", s(&cert), "--schedule", s(&data("refs.json")),
            "--x0", "-0.2,0.3", "--steps", "40", "--eq28-gain", "--out", s(&csv),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn failed_verification_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cert = synth(dir.path());
    // Drop the gain: replace every L coefficient with zero.
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    for v in doc["l"].as_object_mut().unwrap().values_mut() {
        for c in v.as_array_mut().unwrap() {
            *c = serde_json::json!(0.0);
        }
    }
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, doc.to_string()).unwrap();
    let out = dccm(&["verify", "--system", s(&data("cstr.json")), "--cert", s(&zero), "--res", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"pass\": false"));
}

#[test]
fn infeasible_synthesis_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("unstab.json");
    std::fs::write(
        &sys,
        r#"{"n": 1, "m": 1,
            "f": [{"n_vars": 1, "ordering": "grlex", "max_degree": 1, "coeffs": [0.0, 2.0]}],
            "g": [[{"n_vars": 1, "ordering": "grlex", "max_degree": 0, "coeffs": [0.0]}]]}"#,
    )
    .unwrap();
    let out = dccm(&["synth", "--system", s(&sys), "--degree", "0", "--beta", "0.1", "--out", s(&dir.path().join("c.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no certificate"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(dccm(&["synth", "--degree", "2"]).status.code(), Some(2));
    assert_eq!(dccm(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "m": 1, "f": [{"n_vars": 2, "ordering": "grlex", "max_degree": 0, "coeffs": ["a"]}]}"#).unwrap();
    let out = dccm(&["synth", "--system", s(&bad), "--degree", "2", "--out", s(&dir.path().join("c.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("/f/0/coeffs/0"), "{err}");

    let out = dccm(&["verify", "--system", s(&data("cstr.json")), "--cert", s(&bad), "--box", "1:0,0:1"]);
    assert_eq!(out.status.code(), Some(2));
}
