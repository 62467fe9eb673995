use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-readout"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn list_names_every_scenario() {
    let o = cli(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "fig1-fidelity-curves",
        "fig3-histograms",
        "fig4a-detuning-scan",
        "fig4b-transmission-histograms",
        "efficiency-budget",
        "pushout-budget",
    ] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn run_writes_result_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3");
    let o = cli(&["run", "fig3-histograms", "--out", out.to_str().unwrap(), "--shots", "20000", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["result.json", "fig3_pmf.csv", "fig3_histogram.csv", "plot.py"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    let f = v["results"]["fidelity"].as_f64().unwrap();
    assert!((f - 0.994).abs() <= 0.002, "{f}");
}

#[test]
fn efficiency_budget_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["run", "efficiency-budget", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    let eta = v["results"]["eta"].as_f64().unwrap();
    assert!((eta - 0.186).abs() <= 0.001);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, workers: &str| {
        let out = dir.path().join(sub);
        let o = cli(&["run", "fig4b-transmission-histograms", "--out", out.to_str().unwrap(), "--shots", "20000", "--workers", workers]);
        assert_eq!(code(&o), 0);
        fs::read(out.join("result.json")).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "4"));
}

#[test]
fn unknown_scenario_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nope");
    let o = cli(&["run", "fig2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!out.exists());
}

#[test]
fn parse_error_exit_code_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[cavity]\nkappa_mhz = = 2\n");
    let o = cli(&["validate", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = cli(&["run", "pushout-budget", "--config", &cfg]);
    assert_eq!(code(&o), 1);
}

#[test]
fn validate_reports_named_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "neg.toml", "[cavity]\nkappa_mhz = -2.8\n[detection]\ncavity_fraction = 1.0\nmirror_fraction = 1.2\npath_detector_efficiency = 0.9\n");
    let o = cli(&["validate", &cfg]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cavity.kappa must be > 0"), "{err}");
    assert!(err.contains("detection.mirror_fraction"), "{err}");
    assert!(err.contains("efficiency product"), "{err}");
}

#[test]
fn shipped_config_validates() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let o = cli(&["validate", path]);
    assert_eq!(code(&o), 0);
}

#[test]
fn missing_config_is_io_error() {
    let o = cli(&["validate", "/nonexistent/config.toml"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "");
    let o = cli(&["run", "pushout-budget", "--out", &format!("{blocker}/sub")]);
    assert_eq!(code(&o), 4);
}

#[test]
fn monte_carlo_mismatch_is_convergence_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tight.toml", "[scenario]\ntv_tolerance = 1e-6\n");
    let o = cli(&["run", "fig3-histograms", "--config", &cfg, "--shots", "5000", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 5);
}
