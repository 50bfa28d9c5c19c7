use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn camplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camplace")).args(args).output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn run_then_summarize_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = camplace(&["run", scenario("static.json").to_str().unwrap(), "--out-dir", out, "--seed", "5"]);
    assert!(run.status.success(), "{}", text(&run));
    let csv = dir.path().join("static.csv");
    let summary = std::fs::read_to_string(dir.path().join("static_summary.json")).unwrap();

    let sum = camplace(&["summarize", csv.to_str().unwrap(), "--out-dir", out]);
    assert!(sum.status.success(), "{}", text(&sum));
    assert_eq!(std::fs::read_to_string(dir.path().join("static_summarized.json")).unwrap(), summary);

    let rep = camplace(&["replay", csv.to_str().unwrap(), "--scenario", scenario("static.json").to_str().unwrap(), "--out-dir", out]);
    assert!(rep.status.success(), "{}", text(&rep));
    assert_eq!(std::fs::read_to_string(dir.path().join("static_replay_summary.json")).unwrap(), summary);

    let stdout = camplace(&["summarize", csv.to_str().unwrap()]);
    let parsed: serde_json::Value = serde_json::from_slice(&stdout.stdout).unwrap();
    assert_eq!(parsed["ticks"], 500);
}

#[test]
fn calibrate_reports_transform() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.csv");
    std::fs::write(&path, "ax,ay,az,bx,by,bz\n0,0,0,1,0,0\n0.1,0,0,1.1,0,0\n0,0.1,0,1,0.1,0\n0,0,0.1,1,0,0.1\n").unwrap();
    let o = camplace(&["calibrate", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let t = v["transform"].as_array().unwrap();
    assert_eq!(t.len(), 12);
    assert!((t[9].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["mean_abs_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let o = camplace(&["run", "/nonexistent/scenario.json"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("/nonexistent/scenario.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 9, "name": "x", "trajectory": {"kind": "static", "position": [0,0,0], "duration": 1}}"#).unwrap();
    let o = camplace(&["run", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o).contains("schema_version"), "{}", text(&o));

    let o = camplace(&["frobnicate"]);
    assert!(!o.status.success());
}
