use std::path::Path;
use std::process::{Command, Output};

use debranges::gram::GramSystem;
use debranges::{Complex64, StructureFunction, ZeroSequence};

fn run(dir: &Path, json: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, json).unwrap();
    Command::new(env!("CARGO_BIN_EXE_debranges"))
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn verify_exits_zero_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1]], "command": "verify"}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(
        last.starts_with("PASS ") && last.ends_with(&format!("/{}", text.lines().count() - 1)),
        "{text}"
    );
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for field in [
        "check_id",
        "samples",
        "max_rel_residual",
        "tolerance",
        "condition_estimate",
        "passed",
    ] {
        assert!(first.get(field).is_some(), "{field}");
    }
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1], [0, 2]], "command": "verify",
            "tolerances": {"kernel_formula": 0}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL 1/"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "command": "kernel", "z_points": [[0, 2]]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("grid"));

    let out = run(
        dir.path(),
        r#"{"space": {"family": "bessel"}, "command": "verify"}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("space.family"));

    let out = run(dir.path(), "not json", &[]);
    assert_eq!(out.status.code(), Some(2));

    let missing = Command::new(env!("CARGO_BIN_EXE_debranges"))
        .args(["--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn dependent_zeros_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        r#"{"space": {"family": "polynomial_hb", "roots": [[0, -1]]}, "sigma": [[0, 1], [0, 2]], "command": "structure",
            "eval_points": [[0, 0]]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("condition estimate"));
}

#[test]
fn list_checks_needs_no_config() {
    let out = Command::new(env!("CARGO_BIN_EXE_debranges"))
        .arg("--list-checks")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "kernel_formula"));
    assert!(text.lines().any(|l| l == "pw_det_star"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1]], "command": "verify", "seed": 5}"#;
    let a = run(dir.path(), json, &[]).stdout;
    let b = run(dir.path(), json, &["--seed", "5"]).stdout;
    let c = run(dir.path(), json, &["--seed", "6"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn kernel_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1], [0, 1]], "command": "kernel",
            "z_points": [[0, 2], [0.25, 0.5]],
            "grid": {"re_min": -1, "re_max": 1, "re_steps": 5, "im_min": 0, "im_max": 2, "im_steps": 5}}"#,
        &["--output", path.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));

    let space = StructureFunction::paley_wiener(1.0).unwrap();
    let i = Complex64::i();
    let gs = GramSystem::build(&space, &ZeroSequence::canonicalize(&[i, i])).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["re_z", "im_z", "re_w", "im_w", "re_val", "im_val"]
    );
    let mut rows = 0;
    for rec in reader.records() {
        let v: Vec<f64> = rec.unwrap().iter().map(|s| s.parse().unwrap()).collect();
        let k = gs.sigma_kernel(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]));
        assert_eq!((v[4], v[5]), (k.re, k.im));
        rows += 1;
    }
    // the grid contains w = i, a zero of the sequence
    assert_eq!(rows, 50);
}

#[test]
fn structure_csv_has_four_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1]], "command": "structure", "which": "E_sigma",
            "eval_points": [[0, 0], [0, 1]]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "re_w,im_w,re_val,im_val");
    let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    // E_σ(0) = -i tanh 1
    assert!(first[2].abs() < 1e-15);
    assert!((first[3] + 0.761_594_155_955_764_4).abs() < 1e-14);
}

#[test]
fn pw_example_reports_reading() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1], [1, 1]], "command": "pw-example",
            "eval_points": [[0.5, 2]]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("reading"));

    let out = run(
        dir.path(),
        r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1]], "command": "pw-example",
            "eval_points": [[0.5, 0]]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}
