use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vvlab(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vvlab"));
    cmd.args(args).env_remove("VVLAB_WORKERS");
    if let Some(w) = workers {
        cmd.env("VVLAB_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("sweep.cfg");
    let text = format!("N = 32\nT = 0.25\ndt = 0.005\nn_values = 1..3\nmonitor_stride = 5\noutput_dir = out\n{extra}");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = vvlab(&["run", "--config", &config], Some("2"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("short-time guard"));
    for name in ["sweep.csv", "audits.json", "rate.json", "plotdata.csv"] {
        assert!(dir.path().join("out").join(name).is_file(), "{name}");
    }

    let csv = dir.path().join("out/sweep.csv");
    let fit = vvlab(&["fit", "--input", csv.to_str().unwrap()], None);
    assert_eq!(fit.status.code(), Some(0));
    let fitted: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    let rate: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/rate.json")).unwrap()).unwrap();
    assert_eq!(fitted, rate);
}

#[test]
fn failing_ceiling_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "ceiling.cz = 1e-6\n");
    let out = vvlab(&["run", "--config", &config], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAILED audit cz["));
}

#[test]
fn audit_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = vvlab(&["audit", "--config", &config, "--lemma", "bernstein"], None);
    assert_eq!(out.status.code(), Some(0));
    let audits: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let audits = audits.as_array().unwrap();
    assert!(!audits.is_empty());
    assert!(audits.iter().all(|a| a["name"].as_str().unwrap().starts_with("bernstein[")));
    assert!(audits.iter().all(|a| a["floor"].as_f64() == Some(0.25)));
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "N = 30\n").unwrap();
    let out = vvlab(&["run", "--config", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg"));

    let config = write_config(dir.path(), "");
    let out = vvlab(&["run", "--config", &config], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("VVLAB_WORKERS"));

    let out = vvlab(&["audit", "--config", &config, "--lemma", "nope"], None);
    assert_eq!(out.status.code(), Some(2));

    let out = vvlab(&["fit", "--input", "/nonexistent/sweep.csv"], None);
    assert_eq!(out.status.code(), Some(2));
}
