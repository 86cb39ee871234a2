use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn muhs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muhs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const CONSTANT: &str = r#"{
  "grid": {"n_points": 32},
  "equation": {"lambda": 0.3},
  "time": {"t_end": 0.1, "dt": 0.01},
  "initial": {"kind": "cosine", "params": {"a": 0.7, "b": 0.0}}
}"#;

#[test]
fn simulate_constant_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let out = dir.path().join("out");
    let o = muhs(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    for f in manifest["files"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).is_file());
    }
    let verify: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(verify["passed"], true);
}

#[test]
fn kernel_check_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = muhs(&["kernel-check", "--n", "256", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("kernel_check.json")).unwrap()).unwrap();
    assert_eq!(report["n_points"], 256);
    for key in ["spectral_vs_explicit", "spectral_vs_convolution", "explicit_vs_convolution"] {
        assert!(report[key].as_f64().unwrap() <= 1e-8, "{key}");
    }
    assert!(report["identity_2_2"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn usage_errors_differ_from_config_errors() {
    let o = muhs(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(64));
    let o = muhs(&["simulate"]);
    assert_eq!(o.status.code(), Some(64));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONSTANT.replace("0.3", "-1"));
    let o = muhs(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("equation.lambda"));

    let cfg = write_config(dir.path(), &CONSTANT.replace("32", "255"));
    let o = muhs(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));

    let o = muhs(&["simulate", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blowup_guard_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "grid": {"n_points": 32},
  "equation": {"lambda": 0.0},
  "time": {"t_end": 0.1, "dt": 0.01},
  "solver": {"blowup_guard": 1e-3},
  "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.5}}
}"#,
    );
    let out = dir.path().join("out");
    let o = muhs(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("blowup_guard_triggered"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "grid": {"n_points": 64},
  "equation": {"lambda": 0.5},
  "time": {"t_end": 0.2, "dt": 0.001},
  "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.02}}
}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = muhs(&["characteristics", "--config", &cfg, "--out", out.to_str().unwrap(), "--seeds", "4"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["characteristics.csv", "characteristics.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let header = fs::read_to_string(a.join("characteristics.csv")).unwrap();
    assert_eq!(header.lines().next(), Some("t,seed,q,qx,y_along,residual"));
}

#[test]
fn converge_writes_per_member_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "grid": {"n_points": 64},
  "equation": {"lambda": 0.5},
  "time": {"t_end": 0.05, "dt": 0.001},
  "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.02}}
}"#,
    );
    let out = dir.path().join("out");
    let o = muhs(&["converge", "--config", &cfg, "--out", out.to_str().unwrap(), "--ns", "4,8", "--jobs", "2"]);
    assert!(matches!(o.status.code(), Some(0) | Some(4)), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("convergence.json").is_file());
    assert!(out.join("diagnostics_n4.csv").is_file());
    assert!(out.join("diagnostics_n8.csv").is_file());
}
