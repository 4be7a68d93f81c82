use std::path::Path;
use std::process::{Command, Output};

fn wkgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wkgs")).args(args).output().expect("binary runs")
}

fn stdout_lines(o: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path) -> String {
    format!(
        r#"{{
  "model": {{"kind": "linear_wave", "source": "none"}},
  "grid": {{"mode": "radial", "extent": 12.0, "n_cells": 240, "cfl": 0.5, "t0": 2.0}},
  "data": {{"profile": "time_symmetric", "r_outer": 0.9, "amplitude": 1.0}},
  "slices": {{"s_start": 2.0, "s_end": 4.0, "count": 9}},
  "a_list": [0.0, 0.5],
  "k_max": 1,
  "norms": ["energies", "tau_half", "hardy"],
  "outputs": {{"dir": {:?}, "snapshot": "band.wkgs"}}
}}"#,
        dir.join("out").display().to_string()
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn default_identity_suite_passes() {
    let o = wkgs(&["check-identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = stdout_lines(&o);
    assert_eq!(lines.len(), 5);
    for l in &lines {
        assert_eq!(l["verdict"], "pass", "{l}");
        assert_eq!(l["samples"], 10_000);
        assert!(l["artifact"].as_str().unwrap().starts_with("wkgs-"));
        assert_eq!(l["config_sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn tolerance_below_rounding_fails_the_check() {
    let o = wkgs(&["check-identities", "--samples", "500", "--tol", "1e-18", "--precision", "f64"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout_lines(&o).iter().any(|l| l["verdict"] == "fail"));
}

#[test]
fn zero_samples_is_a_vacuous_pass_with_warning() {
    let o = wkgs(&["check-identities", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert!(stdout_lines(&o).iter().all(|l| l["verdict"] == "pass"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(wkgs(&["check-identities", "--precision", "quad"]).status.code(), Some(2));
    assert_eq!(wkgs(&["nonsense"]).status.code(), Some(2));
    let o = wkgs(&["verify-balance", "--config", "x.json", "--multiplier", "Zz", "--a", "0", "--s0", "2", "--s1", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Zz"));
}

#[test]
fn missing_config_reports_the_path() {
    let o = wkgs(&["evolve", "--config", "/nonexistent/run.json"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("/nonexistent/run.json"), "{}", stderr(&o));
}

#[test]
fn schema_violation_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(dir.path()).replace(r#""cfl": 0.5"#, r#""cfl": 0.5, "cfl_factor": 1"#);
    let cfg = write_config(dir.path(), "run.json", &text);
    let o = wkgs(&["evolve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("cfl_factor") && msg.contains("grid"), "{msg}");
}

#[test]
fn evolve_then_fit_and_balance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &small_config(dir.path()));
    let o = wkgs(&["evolve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = &stdout_lines(&o)[0];
    let hash = summary["config_sha256"].as_str().unwrap().to_string();
    let out = dir.path().join("out");
    for name in ["energies.csv", "pointwise.csv", "diagnostics.jsonl", "band.wkgs", "run.json"] {
        let bytes = std::fs::read(out.join(name)).unwrap_or_else(|_| panic!("{name} written"));
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains(&hash), "{name} lacks the config hash");
        assert!(text.contains("wkgs-"), "{name} lacks the artifact version");
    }

    let energies = out.join("energies.csv").display().to_string();
    let o = wkgs(&["fit-decay", "--input", &energies, "--column", "EW@0", "--smin", "2", "--smax", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit = &stdout_lines(&o)[0];
    assert!(fit["p"].as_f64().unwrap().abs() < 0.05, "{fit}");
    assert_eq!(fit["points"], 9);
    assert_eq!(fit["config_sha256"].as_str().unwrap(), hash);

    let o = wkgs(&["fit-decay", "--input", &energies, "--column", "E1a", "--smin", "2", "--smax", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ambiguous"));
    let o = wkgs(&["fit-decay", "--input", &energies, "--column", "nope", "--smin", "2", "--smax", "4"]);
    assert_eq!(o.status.code(), Some(2));

    let pointwise = out.join("pointwise.csv").display().to_string();
    let o = wkgs(&["fit-decay", "--input", &pointwise, "--column", "tau_half/phi", "--smin", "2", "--smax", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = wkgs(&["verify-balance", "--config", &cfg, "--multiplier", "Ka", "--a", "0.75", "--s0", "2.5", "--s1", "3.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = &stdout_lines(&o)[0];
    assert_eq!(rep["multiplier"], "Ka");
    assert!(rep["residual"].as_f64().unwrap() < 1e-2, "{rep}");
    assert_eq!(rep["config_sha256"].as_str().unwrap(), hash);

    let o = wkgs(&["verify-balance", "--config", &cfg, "--multiplier", "Ka", "--a", "0.2", "--s0", "2.5", "--s1", "3.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn thread_count_does_not_change_bytes() {
    let mut seen: Vec<Vec<u8>> = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let text = small_config(Path::new("")).replace(r#""dir": "out""#, r#""dir": "o""#);
        let cfg = write_config(dir.path(), "run.json", &text);
        let o = Command::new(env!("CARGO_BIN_EXE_wkgs"))
            .current_dir(dir.path())
            .env("WKGS_THREADS", threads)
            .args(["evolve", "--config", &cfg])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        seen.push(std::fs::read(dir.path().join("o/energies.csv")).unwrap());
    }
    assert_eq!(seen[0], seen[1]);
    let o = Command::new(env!("CARGO_BIN_EXE_wkgs")).env("WKGS_THREADS", "zero").args(["check-identities", "--samples", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_abort_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(dir.path()).replace(r#""extent": 12.0, "n_cells": 240"#, r#""extent": 4.0, "n_cells": 80"#);
    let cfg = write_config(dir.path(), "run.json", &text);
    let o = wkgs(&["evolve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("grid edge"));
}

#[test]
fn convergence_writes_the_order_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{
  "run": {{
    "model": {{"kind": "linear_wave", "source": "none"}},
    "grid": {{"mode": "radial", "extent": 8.0, "n_cells": 400, "cfl": 0.5, "t0": 3.1}},
    "data": {{"profile": "manufactured", "r_outer": 0.0, "amplitude": 1.0, "case": "spherical_wave_bump"}},
    "slices": {{"s_start": 3.5, "s_end": 3.5, "count": 1}},
    "outputs": {{"dir": {:?}}}
  }},
  "levels": [200, 400],
  "quantity": {{"kind": "field_error", "s": 3.5}},
  "table": "conv.csv"
}}"#,
        dir.path().display().to_string()
    );
    let cfg = write_config(dir.path(), "conv.json", &text);
    let o = wkgs(&["convergence", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout_lines(&o).len(), 2);
    let table = std::fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    assert!(table.starts_with("# artifact=wkgs-"));
    assert_eq!(table.lines().nth(1), Some("level,n_cells,h,value,order"));
    assert_eq!(table.lines().count(), 4);
}
