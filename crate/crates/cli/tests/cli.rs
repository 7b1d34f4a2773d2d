//! End-to-end tests of the command-line interface: output contracts,
//! determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bandedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandedge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = bandedge(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    bandedge(args).status.code().unwrap()
}

#[test]
fn classify_fractional_d3() {
    let text = stdout(&[
        "classify",
        "--psi",
        "fractional",
        "--alpha",
        "1",
        "--dim",
        "3",
    ]);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["top"], "resonance");
    assert_eq!(json["bottom"], "mode");
    assert!(json["v0"].as_f64().unwrap() < 0.0);
    assert!(json["v2"].as_f64().unwrap() > 0.0);
    assert_eq!(json["exponents"]["bottom"], 0.5);
}

#[test]
fn classify_identity_d1_is_unconditional() {
    let text = stdout(&["classify", "--psi", "identity", "--dim", "1"]);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["top"], "unconditional");
    assert_eq!(json["bottom"], "unconditional");
    assert_eq!(json["v0"], 0.0);
    assert_eq!(json["v2"], 0.0);
}

#[test]
fn classify_massless_equals_fractional_bytes() {
    let massless = stdout(&[
        "classify",
        "--psi",
        "relativistic",
        "--alpha",
        "1",
        "--mass",
        "0",
        "--dim",
        "2",
    ]);
    let fractional = stdout(&[
        "classify",
        "--psi",
        "fractional",
        "--alpha",
        "1",
        "--dim",
        "2",
    ]);
    assert_eq!(massless, fractional);
}

#[test]
fn classify_is_deterministic() {
    let args = [
        "classify",
        "--psi",
        "geometric_stable",
        "--alpha",
        "1",
        "--dim",
        "3",
    ];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn thresholds_identity_d3_watson() {
    let text = stdout(&[
        "thresholds",
        "--psi",
        "identity",
        "--dim",
        "3",
        "--format",
        "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "dim,v0,v2");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v0: f64 = row[1].parse().unwrap();
    let v2: f64 = row[2].parse().unwrap();
    assert!((v2 - 0.6594626).abs() < 1e-4);
    assert!((v0 + v2).abs() < 1e-9);
}

#[test]
fn thresholds_identity_d1_vanish() {
    let text = stdout(&[
        "thresholds",
        "--psi",
        "identity",
        "--dim",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(text, "dim,v0,v2\n1,0,0\n");
}

#[test]
fn thresholds_fractional_d2_one_sided() {
    let text = stdout(&[
        "thresholds",
        "--psi",
        "fractional",
        "--alpha",
        "1",
        "--dim",
        "2",
    ]);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["v2"], 0.0);
    assert!(json["v0"].as_f64().unwrap() < 0.0);
    assert_eq!(json["top_integral"]["finite"], false);
    assert_eq!(json["bottom_integral"]["finite"], true);
}

#[test]
fn eigencurve_identity_d1_closed_form() {
    let text = stdout(&[
        "eigencurve",
        "--psi",
        "identity",
        "--dim",
        "1",
        "--v",
        "0.5:4:8",
        "--format",
        "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "v,E");
    for line in lines {
        let (v, e) = line.split_once(',').unwrap();
        let v: f64 = v.parse().unwrap();
        let e: f64 = e.parse().unwrap();
        let expected = 1.0 + (1.0 + v * v).sqrt();
        assert!((e - expected).abs() < 1e-6, "v = {v}: {e} vs {expected}");
    }
}

#[test]
fn eigencurve_fractional_d3_negative_branch() {
    // Threshold sits near v0 ~ -0.897: shallow couplings give empty rows,
    // strong ones a populated branch below the window.
    let text = stdout(&[
        "eigencurve",
        "--psi",
        "fractional",
        "--alpha",
        "1",
        "--dim",
        "3",
        "--v",
        "-3:-0.1:12",
        "--format",
        "csv",
    ]);
    let mut populated = 0;
    let mut empty = 0;
    for line in text.lines().skip(1) {
        let (v, e) = line.split_once(',').unwrap();
        let v: f64 = v.parse().unwrap();
        if e.is_empty() {
            assert!(v > -0.897, "row for v = {v} should be populated");
            empty += 1;
        } else {
            let e: f64 = e.parse().unwrap();
            assert!(v < -0.896, "row for v = {v} should be empty");
            assert!(e < 0.0, "branch energy must lie below the window");
            populated += 1;
        }
    }
    assert_eq!(populated, 8);
    assert_eq!(empty, 4);
}

#[test]
fn eigencurve_mode_threshold_single_row() {
    // d = 5 identity: the top edge is a mode; at v = v2 the curve touches
    // the edge energy exactly.
    let text = stdout(&[
        "thresholds",
        "--psi",
        "identity",
        "--dim",
        "5",
        "--format",
        "csv",
    ]);
    let v2 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .to_string();
    let curve = stdout(&[
        "eigencurve",
        "--psi",
        "identity",
        "--dim",
        "5",
        "--v",
        &v2,
        "--format",
        "csv",
    ]);
    assert_eq!(curve, format!("v,E\n{v2},2\n"));
}

#[test]
fn table_identity_golden() {
    let text = stdout(&[
        "table", "--psi", "identity", "--dims", "1:5", "--format", "csv",
    ]);
    let expected = "\
d,top_mode,top_resonance,bottom_mode,bottom_resonance
1,false,false,false,false
2,false,false,false,false
3,false,true,false,true
4,false,true,false,true
5,true,false,true,false
";
    assert_eq!(text, expected);
}

#[test]
fn table_fractional_golden() {
    let text = stdout(&[
        "table",
        "--psi",
        "fractional",
        "--alpha",
        "1",
        "--dims",
        "1:5",
        "--format",
        "csv",
    ]);
    let expected = "\
d,top_mode,top_resonance,bottom_mode,bottom_resonance
1,false,false,false,false
2,false,false,false,true
3,false,true,true,false
4,false,true,true,false
5,true,false,true,false
";
    assert_eq!(text, expected);
}

#[test]
fn table_relativistic_massive_matches_identity() {
    let massive = stdout(&[
        "table",
        "--psi",
        "relativistic",
        "--alpha",
        "1",
        "--mass",
        "1",
        "--dims",
        "1:5",
        "--format",
        "csv",
    ]);
    let identity = stdout(&[
        "table", "--psi", "identity", "--dims", "1:5", "--format", "csv",
    ]);
    assert_eq!(massive, identity);
}

#[test]
fn oracle_convergence_report() {
    let text = stdout(&[
        "oracle",
        "--psi",
        "identity",
        "--dim",
        "1",
        "--v",
        "1",
        "--grid",
        "16,64,256",
        "--format",
        "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,E_N,abs_error");
    let errors: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 3);
    assert!(errors[2] < 1e-3);
}

#[test]
fn oracle_detects_nonconvergence() {
    // Feeding the grid sizes in decreasing order makes the error grow,
    // which the oracle reports through exit code 4 (after printing).
    let out = bandedge(&[
        "oracle", "--psi", "identity", "--dim", "1", "--v", "1", "--grid", "64,16", "--format",
        "csv",
    ]);
    assert_eq!(out.status.code().unwrap(), 4);
    assert!(!out.stdout.is_empty(), "report must still be emitted");
}

#[test]
fn oracle_zero_coupling_prints_band_samples() {
    let text = stdout(&[
        "oracle", "--psi", "identity", "--dim", "1", "--v", "0", "--grid", "2", "--format", "csv",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,E_N,abs_error");
    assert_eq!(lines.len(), 3);
    let low: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    let high: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(low.abs() < 1e-15);
    assert!((high - 2.0).abs() < 1e-12);
}

#[test]
fn integral_j_identity_d1() {
    let text = stdout(&[
        "integral", "--psi", "identity", "--dim", "1", "--energy", "3",
    ]);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["finite"], true);
    assert_eq!(json["converged"], true);
    let value = json["value"].as_f64().unwrap();
    assert!((value - 2.0 * std::f64::consts::PI / 3.0f64.sqrt()).abs() < 1e-8);
    assert!(json["trace"].as_array().unwrap().len() >= 2);
}

#[test]
fn spec_file_bernstein() {
    let dir = std::env::temp_dir().join("bandedge-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bernstein.json");
    std::fs::write(
        &path,
        r#"{"kind":"bernstein","drift":0.0,"atoms":[{"w":1.0,"y":2.0}]}"#,
    )
    .unwrap();
    let text = stdout(&[
        "classify",
        "--spec-file",
        path.to_str().unwrap(),
        "--dim",
        "5",
    ]);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    // Finite atom sums behave like the local Laplacian: modes in d = 5.
    assert_eq!(json["top"], "mode");
    assert_eq!(json["bottom"], "mode");
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("bandedge-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.csv");
    let _ = std::fs::remove_file(&path);
    let out = bandedge(&[
        "table",
        "--psi",
        "identity",
        "--dims",
        "1:3",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(Path::new(&path).exists());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("d,top_mode"));
}

#[test]
fn config_errors_exit_2() {
    // No multiplier source.
    assert_eq!(exit_code(&["classify", "--dim", "1"]), 2);
    // Two multiplier sources.
    assert_eq!(
        exit_code(&[
            "classify",
            "--psi",
            "identity",
            "--spec-file",
            "/nonexistent",
            "--dim",
            "1"
        ]),
        2
    );
    // Parameter out of range.
    assert_eq!(
        exit_code(&[
            "classify",
            "--psi",
            "fractional",
            "--alpha",
            "2.5",
            "--dim",
            "1"
        ]),
        2
    );
    // Unknown kind and unsupported dimension.
    assert_eq!(exit_code(&["classify", "--psi", "cauchy", "--dim", "1"]), 2);
    assert_eq!(
        exit_code(&["classify", "--psi", "identity", "--dim", "9"]),
        2
    );
}

#[test]
fn numeric_errors_exit_3() {
    // Interior energies carry no point spectrum; the integral is rejected.
    assert_eq!(
        exit_code(&["integral", "--psi", "identity", "--dim", "1", "--energy", "1.0"]),
        3
    );
}
