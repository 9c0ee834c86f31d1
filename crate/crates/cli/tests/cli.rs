//! End-to-end tests of the command-line interface: artifacts, exit codes,
//! and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hydronozzle")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("failed to launch the binary")
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(bin())
        .args(args)
        .env("HYDRONOZZLE_THREADS", threads)
        .output()
        .expect("failed to launch the binary")
}

const STRIP_CONSTANT: &str = r#"
[profile]
kind = "constant"

[geometry]
kind = "strip"

[grid]
ny1 = 50
ny2 = 50
cutoff = 8.0
"#;

const BUMP_QUARTIC: &str = r#"
[profile]
kind = "quartic_bump"
amplitude = 0.2

[geometry]
kind = "bump"
offset = 0.0
width = 1.3
support = 4.0
amp0 = -0.05
amp1 = 0.1

[grid]
ny1 = 50
ny2 = 50
cutoff = 8.0

[tolerances]
residual_ceiling = 5e-3
"#;

#[test]
fn solve_strip_constant_reports_uniform_flow() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", STRIP_CONSTANT);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert!((summary["c"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((summary["gamma_bar"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(summary["shear"]["status"], "ConfirmedEmpirically");
    assert!(out_dir.join("field.csv").exists());
}

#[test]
fn solve_all_methods_records_cross_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BUMP_QUARTIC);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--solver",
        "all",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("method_deviation.json")).unwrap(),
    )
    .unwrap();
    assert!(report["max_dev_picard_vs_lagrange"].as_f64().unwrap() <= 1e-6);
    assert!(report["max_dev_shooting_vs_lagrange"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn identical_configs_produce_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BUMP_QUARTIC);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    // different thread counts must not change a single byte
    let ra = run_with_threads(
        &[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_a.to_str().unwrap(),
        ],
        "1",
    );
    let rb = run_with_threads(
        &[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_b.to_str().unwrap(),
        ],
        "4",
    );
    assert!(ra.status.success() && rb.status.success());
    for name in ["field.csv", "summary.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn verify_passes_on_a_converged_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BUMP_QUARTIC);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "verify failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_pass"], true);
}

#[test]
fn injected_vertical_noise_fails_the_divergence_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BUMP_QUARTIC);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--inject-v2-noise",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("residual_divergence_sup"),
        "divergence check not named:\n{stdout}"
    );
}

#[test]
fn counterexample_fixture_verifies_with_truncation_note() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", STRIP_CONSTANT);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--counterexample",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_pass"], true);
    assert!(report["note"].as_str().unwrap().contains("truncated"));
}

#[test]
fn coarse_grid_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        r#"
[profile]
kind = "constant"

[geometry]
kind = "strip"

[grid]
ny1 = 50
ny2 = 10
cutoff = 8.0
"#,
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("grid too coarse"), "{stdout}");
}

#[test]
fn unknown_profile_kind_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        r#"
[profile]
kind = "vortex_sheet"

[geometry]
kind = "strip"
"#,
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_writes_per_seed_files_and_tolerates_bad_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", STRIP_CONSTANT);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "trace",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed=0,0.25",
        "--seed=0,0.5",
        "--seed=0,0.75",
        "--seed=0,1.0",
        "--t-span",
        "12",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("traces.json")).unwrap())
            .unwrap();
    assert_eq!(summary["succeeded"], 3);
    assert_eq!(summary["failed"], 1);
    for k in 0..3 {
        let path = out_dir.join(format!("trace_{k:03}.csv"));
        assert!(path.exists());
        let drift = summary["entries"][k]["phi_drift"].as_f64().unwrap();
        assert!(drift <= 1e-6, "phi drift {drift} on trace {k}");
        // uniform strip flow: every path is a horizontal line
        let body = std::fs::read_to_string(&path).unwrap();
        let mut x2_first = None;
        for line in body.lines().skip(1) {
            let x2: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            let first = *x2_first.get_or_insert(x2);
            assert!((x2 - first).abs() < 1e-10, "trace {k} is not horizontal");
        }
    }
    // the wall seed is reported, not written
    assert_eq!(summary["entries"][3]["file"], serde_json::Value::Null);
}

#[test]
fn slice_with_all_solvers_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BUMP_QUARTIC);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "slice",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--y1",
        "0.5",
        "--solver",
        "all",
    ]);
    assert!(out.status.success());
    for name in [
        "slice_lagrange.csv",
        "slice_picard.csv",
        "slice_shooting.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("slice_deviation.json")).unwrap(),
    )
    .unwrap();
    assert!(report["max_dev_picard_vs_lagrange"].as_f64().unwrap() <= 1e-6);
    assert!(report["max_dev_shooting_vs_lagrange"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn sampled_profile_table_solves_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("x2,v1\n");
    for i in 0..=16 {
        let x = i as f64 / 16.0;
        table.push_str(&format!("{x},{}\n", 1.0 + 0.2 * (x - 0.5) * (x - 0.5)));
    }
    std::fs::write(dir.path().join("profile.csv"), table).unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        &format!(
            r#"
[profile]
kind = "csv"
path = "{}"

[geometry]
kind = "strip"

[grid]
ny1 = 50
ny2 = 50
cutoff = 8.0
"#,
            dir.path().join("profile.csv").display()
        ),
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    // interpolated table integrates close to the analytic 61/60
    assert!((summary["c"].as_f64().unwrap() - 61.0 / 60.0).abs() < 1e-3);
}

#[test]
fn farfield_fluxes_match_the_mass_flux() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BUMP_QUARTIC);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "farfield",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("farfield.json")).unwrap())
            .unwrap();
    assert!(summary["upstream"]["flux_rel_err"].as_f64().unwrap() <= 1e-8);
    assert!(summary["downstream"]["flux_rel_err"].as_f64().unwrap() <= 1e-8);
    assert!(out_dir.join("farfield_upstream.csv").exists());
    assert!(out_dir.join("farfield_downstream.csv").exists());
}
