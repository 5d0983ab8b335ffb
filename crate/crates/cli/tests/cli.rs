use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn ff(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_front-forge"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SINGLE_FRONT: &str = r#"{
  "arrangement": {"dim": 2, "fronts": [{"nu": [1.0], "theta": 1.5707963267948966, "tau": 0.0}]},
  "surface": {"calibration_samples": 200},
  "experiment": {"residual_samples": 500}
}"#;

#[test]
fn profile_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = ff(&["profile", "--theta", "0.25", "--out", "p"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = dir.path().join("p");
    let summary = json(&p.join("profile.json"));
    assert!((summary["c_f"].as_f64().unwrap() - 0.3535534).abs() < 1e-6);

    // The binary header carries the speed too.
    let bin = std::fs::read(p.join("profile.bin")).unwrap();
    let nl = bin.iter().position(|&b| b == b'\n').unwrap();
    let header: Value = serde_json::from_slice(&bin[..nl]).unwrap();
    assert!((header["c_f"].as_f64().unwrap() - 0.3535534).abs() < 1e-6);

    let manifest = json(&p.join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "resolved_config.json"));
    for f in files {
        let bytes = std::fs::read(p.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"grid": {"solver": {"cfl": 0.5}}}"#).unwrap();
    let out = ff(&["verify", "--config", "bad.json", "--suite", "super"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.solver.cfl"));

    let out = ff(&["verify", "--suite", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = ff(&["profile", "--theta", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_front_residual_is_exact_and_reports_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.json"), SINGLE_FRONT).unwrap();
    let run = |name: &str| {
        let out = ff(&["verify", "--config", "one.json", "--suite", "super", "--report", name], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run("a.json");
    run("b.json");
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b, "identical config and seed give identical reports");

    let report: Value = serde_json::from_slice(&a).unwrap();
    let exact = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "planar_residual_exact")
        .unwrap();
    assert_eq!(exact["pass"], true);
    assert!(exact["measured"][0].as_f64().unwrap() <= 1e-9);

    let same = ff(&["report-diff", "a.json", "a.json"], dir.path());
    assert_eq!(same.status.code(), Some(0));

    // Flip one verdict and the diff must notice.
    let mut flipped = report.clone();
    let pass = flipped["checks"][0]["pass"].as_bool().unwrap();
    flipped["checks"][0]["pass"] = Value::Bool(!pass);
    std::fs::write(dir.path().join("c.json"), serde_json::to_vec(&flipped).unwrap()).unwrap();
    let changed = ff(&["report-diff", "a.json", "c.json"], dir.path());
    assert_eq!(changed.status.code(), Some(1));
    assert!(!changed.stdout.is_empty());
}

#[test]
fn simulate_writes_a_readable_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "surface": {"calibration_samples": 200},
      "grid": {"nodes": [32, 48], "dx": 0.5, "y_low": -12.0, "steps_per_unit": 40}
    }"#;
    std::fs::write(dir.path().join("s.json"), cfg).unwrap();
    let out = ff(&["simulate", "--config", "s.json", "--t0", "-2", "--t1", "0", "--out", "sim", "--threads", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let field = front_forge::pde::GridField::load(&dir.path().join("sim/final.ffg")).unwrap();
    assert_eq!(field.time, 0.0);
    assert_eq!(field.grid.dims(), &[32, 48]);
    assert!(field.values.iter().all(|v| (0.0..=1.0).contains(v)));
    let stats = json(&dir.path().join("sim/stats.json"));
    assert_eq!(stats["steps"], 80);
}
