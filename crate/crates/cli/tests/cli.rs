use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ehrenfest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehrenfest"))
        .args(args)
        .output()
        .expect("failed to launch the binary")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
preset = "cross-validation"
[stepper]
dt = 1e-3
t_final = 1.0
sample_every = 10
[output]
name = "small"
"#;

#[test]
fn help_documents_presets_and_schema() {
    let out = ehrenfest(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = text(&out.stdout);
    for name in ehrenfest_core::preset_names() {
        assert!(help.contains(name), "missing preset {name}");
    }
    for key in [
        "[grid]",
        "[state]",
        "[model]",
        "[potential]",
        "[stepper]",
        "sample_every",
    ] {
        assert!(help.contains(key), "missing schema key {key}");
    }
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ehrenfest(&["experiment", "nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(
        err.contains("free-packet") && err.contains("nonlinear-force"),
        "{err}"
    );
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "preset = \"free-packet\"\n[grid]\nsize = 64\n[stepper]\ndt = 0.5\n",
    );
    let out = ehrenfest(&[
        "run",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("size"), "{}", text(&out.stderr));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    let out = ehrenfest(&[
        "run",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(ehrenfest(&[]).status.code(), Some(2));
    assert_eq!(
        ehrenfest(&["boost-test", "--model", "bogus"]).status.code(),
        Some(2)
    );
}

#[test]
fn run_writes_identical_files_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = ehrenfest(&[
            "run",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
        let csv = fs::read(out_dir.join("small.csv")).unwrap();
        let report = fs::read(out_dir.join("small.json")).unwrap();
        assert!(out_dir.join("small.timing.json").exists());
        outputs.push((csv, report));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = text(&outputs[0].0);
    assert!(csv.starts_with(
        "t,norm,x_mean,v_mean,p_total,force_full,force_partial,dg_violation,energy\n"
    ));
}

#[test]
fn aborted_run_fails_with_the_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "preset = \"dg-violation\"\n");
    let out = ehrenfest(&[
        "run",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = fs::read_to_string(dir.path().join("dg-violation.json")).unwrap();
    assert!(report.contains("blow-up"), "{report}");
}

#[test]
fn experiment_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = ehrenfest(&[
        "experiment",
        "free-packet",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let report = fs::read_to_string(dir.path().join("free-packet.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
    assert!(dir.path().join("free-packet/free-packet.csv").exists());
}

#[test]
fn boost_test_reports_covariance_error() {
    let out = ehrenfest(&["boost-test", "--model", "linear", "--dv", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("covariance error"));
}
