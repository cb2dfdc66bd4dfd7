//! End-to-end tests of the binary: exit codes, artifacts, CSV round-trips.

use std::path::Path;
use std::process::{Command, Output};

const EXIT_VALIDATION: i32 = 2;

fn petc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petc"))
        .args(args)
        .output()
        .unwrap()
}

fn default_toml() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/default.toml")).unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_all_five_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = petc(&["run", "--quiet", "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["telemetry.csv", "events.csv", "metrics.csv", "summary.txt", "plot.gp"] {
        let path = out_dir.join(name);
        assert!(path.exists(), "missing artifact {name}");
        assert!(std::fs::metadata(&path).unwrap().len() > 0, "empty artifact {name}");
    }
}

#[test]
fn emitted_csvs_reparse() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    assert!(petc(&["run", "--quiet", "--output-dir", out_dir.to_str().unwrap()])
        .status
        .success());
    for name in ["telemetry.csv", "events.csv", "metrics.csv"] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert!(!header.is_empty());
        let mut rows = 0usize;
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), header.len(), "{name}: ragged row");
            for (col, head) in cols.iter().zip(&header) {
                // Every numeric-named column parses back to f64.
                if head.ends_with("_s")
                    || head.ends_with("_nm")
                    || head.starts_with('q')
                    || head.starts_with("norm")
                    || *head == "t"
                    || *head == "pi"
                    || *head == "beta"
                    || *head == "lyapunov"
                {
                    assert!(col.parse::<f64>().is_ok(), "{name}: {head} = {col}");
                }
            }
            rows += 1;
        }
        assert!(rows > 0, "{name}: no data rows");
    }
}

#[test]
fn invalid_h_exits_with_validation_code_naming_field() {
    let tmp = tempfile::tempdir().unwrap();
    let text = default_toml().replace("h_s = 0.0002", "h_s = 0.00013");
    let path = write_scenario(tmp.path(), &text);
    let out = petc(&["validate", &path]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trigger.h_s"), "{stderr}");
}

#[test]
fn infeasible_reference_exits_citing_first_violating_instant() {
    let tmp = tempfile::tempdir().unwrap();
    let text = default_toml().replace("end_rad = [-0.5, 0.5]", "end_rad = [-9.0, 0.5]");
    let path = write_scenario(tmp.path(), &text);
    let out = petc(&["validate", &path]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("leaves the constraint box"), "{stderr}");
    assert!(stderr.contains("t = "), "{stderr}");
}

#[test]
fn bounds_prints_full_table() {
    let out = petc(&["bounds"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for key in [
        "delta_bar", "kappa", "a", "eps_bound", "l1", "l2", "l3", "l4", "l_m", "nu", "h_star",
        "h_class",
    ] {
        assert!(stdout.lines().any(|l| l.starts_with(key)), "missing {key} in:\n{stdout}");
    }
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    // Shorten the run so the sweep stays fast.
    let text = default_toml().replace("t_end_s = 8.0", "t_end_s = 5.0");
    let path = write_scenario(tmp.path(), &text);
    let out = petc(&[
        "sweep",
        &path,
        "--param",
        "h",
        "--values",
        "0.0001,0.0002,0.00013",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert_eq!(lines.iter().filter(|l| l.contains(",ok,")).count(), 2);
    assert_eq!(lines.iter().filter(|l| l.contains(",failed,")).count(), 1);
}

#[test]
fn validate_accepts_bundled_scenario() {
    let out = petc(&["validate"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scenario valid"), "{stdout}");
}
