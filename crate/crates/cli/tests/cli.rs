//! End-to-end checks of the `gqd` binary: output plumbing, settings
//! precedence, determinism, and failure diagnostics.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gqd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqd"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const HEADER: &str = "tau,gqd_123,gqd_12,gqd_13,gqd_23,mgqd,d_r1,d_r2,d_r3,p_e1,p_e2,p_e3";

// Short horizon and few starts keep each invocation fast; dt 0.02 with
// stride 20 samples at tau = 0 and 0.4.
const FAST_RUN: &[&str] = &[
    "--scenario",
    "sudden_transition",
    "--tmax",
    "0.4",
    "--starts",
    "4",
];

#[test]
fn prints_csv_to_stdout_by_default() {
    let output = gqd(FAST_RUN);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 3);
    assert!(text.ends_with('\n'));
    assert!(lines[1].starts_with("0.0000000000000000e0,"));
    assert!(lines[2].starts_with("4.0000000000000"));
}

#[test]
fn reruns_into_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let mut args = FAST_RUN.to_vec();
        let path_str = path.to_str().unwrap().to_owned();
        args.extend(["--out", &path_str]);
        let output = gqd(&args);
        assert!(output.status.success(), "{}", stderr_of(&output));
        assert!(output.stdout.is_empty());
        fs::read(&path).unwrap()
    };
    let first = run("a.csv");
    let second = run("b.csv");
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn flags_take_precedence_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(
        &config,
        "# sudden-transition run\nscenario = sudden_transition\ntmax = 0.4\nstarts = 4\n",
    )
    .unwrap();
    let config_str = config.to_str().unwrap();

    let from_file = gqd(&["--config", config_str]);
    assert!(from_file.status.success(), "{}", stderr_of(&from_file));
    let rows = String::from_utf8(from_file.stdout).unwrap().lines().count();
    assert_eq!(rows, 3);

    // A longer horizon from the flag wins and yields one more sample.
    let overridden = gqd(&["--config", config_str, "--tmax", "0.8"]);
    assert!(overridden.status.success(), "{}", stderr_of(&overridden));
    let rows = String::from_utf8(overridden.stdout).unwrap().lines().count();
    assert_eq!(rows, 4);
}

#[test]
fn missing_scenario_is_a_clean_failure() {
    let output = gqd(&["--alpha", "0.5"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("no scenario kind"));
}

#[test]
fn unknown_scenario_name_is_rejected() {
    let output = gqd(&["--scenario", "warp"]);
    assert!(!output.status.success());
    assert!(stderr_of(&output).contains("unknown scenario"));
}

#[test]
fn bad_config_lines_are_reported_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("broken.conf");
    fs::write(&config, "scenario = alpha_sweep\nalpha == 0.3\n").unwrap();
    let output = gqd(&["--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let diagnostics = stderr_of(&output);
    assert!(diagnostics.contains("settings line 2"), "{diagnostics}");
    assert!(diagnostics.contains("broken.conf"), "{diagnostics}");
}

#[test]
fn missing_config_file_is_a_clean_failure() {
    let missing = Path::new("surely-does-not-exist.conf");
    let output = gqd(&["--config", missing.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("reading config file"));
}

#[test]
fn out_of_range_alpha_is_rejected() {
    let output = gqd(&["--scenario", "mgqd_trajectory", "--alpha", "1.5"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("outside [0, 1]"));
}
