use gencrit::problem::load_problem;
use gencrit::suite;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn problem(name: &str) -> String {
    problems_dir().join(name).display().to_string()
}

fn gencrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gencrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs with `--out` into a temporary file; returns the exit code and the
/// parsed report.
fn run_report(args: &[&str]) -> (i32, Value, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out.display().to_string();
    full.extend(["--out", &out_str]);
    let output = gencrit(&full);
    let text = std::fs::read_to_string(&out).expect("report written");
    let value: Value = serde_json::from_str(&text).expect("report is valid JSON");
    assert_eq!(value["schema"], "gencrit.report/1");
    (output.status.code().unwrap(), value, text)
}

#[test]
fn classify_sphere_slice_at_its_critical_point() {
    let (code, r, _) = run_report(&[
        "classify",
        &problem("sphere_slice.json"),
        "--at",
        "0.6,0.8,0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["regularity"]["rank"], 2);
    assert_eq!(r["regularity"]["regular"], false);
    assert_eq!(
        r["regularity"]["generalized_regular"]["verdict"],
        "confirmed"
    );
}

#[test]
fn classify_circle_is_regular() {
    let (code, r, _) = run_report(&["classify", &problem("circle.json"), "--at", "0.6,0.8"]);
    assert_eq!(code, 0);
    assert_eq!(r["regularity"]["regular"], true);
}

#[test]
fn solve_circle_reports_unique_multiplier() {
    let (code, r, _) = run_report(&["solve", &problem("circle.json")]);
    assert_eq!(code, 0);
    let x: Vec<f64> = serde_json::from_value(r["stationarity"]["point"].clone()).unwrap();
    assert!((x[0] - 0.6).abs() < 1e-8 && (x[1] - 0.8).abs() < 1e-8);
    assert_eq!(r["certificate"]["kind"], "unique_regular");
    assert!((r["certificate"]["l"][0].as_f64().unwrap() + 4.0).abs() < 1e-10);
}

#[test]
fn solve_sphere_slice_reports_ill_posed_multipliers() {
    let (code, r, _) = run_report(&["solve", &problem("sphere_slice.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["certificate"]["kind"], "ill_posed");
    assert!(r["certificate"]["gap"].as_f64().unwrap() >= 1.0 - 1e-8);
}

#[test]
fn start_flag_overrides_x_init_and_accepts_negative_values() {
    let (code, r, _) = run_report(&["solve", &problem("circle.json"), "--start", "-1,0.1"]);
    assert_eq!(code, 0);
    assert_eq!(r["command"]["start"], "-1,0.1");
    assert_eq!(r["stationarity"]["is_critical"], true);
}

#[test]
fn unreachable_tolerance_exits_4_with_last_iterate() {
    let (code, r, _) = run_report(&[
        "solve",
        &problem("ellipse.json"),
        "--tol",
        "1e-30",
        "--max-iter",
        "30",
    ]);
    assert_eq!(code, 4);
    assert_eq!(r["status"], "not_converged");
    assert_eq!(r["stationarity"]["converged"], false);
    assert_eq!(r["stationarity"]["iterations"], 30);
    assert_eq!(r["stationarity"]["point"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_json_exits_2_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = "{\n  \"schema\": \"gencrit.problem/1\",\n  \"n\": 2 \"m\": 1\n}";
    std::fs::write(&bad, text).unwrap();
    let offending = text.find("\"m\"").unwrap();
    let (code, r, _) = run_report(&["classify", bad.to_str().unwrap(), "--at", "0,0"]);
    assert_eq!(code, 2);
    let message = r["diagnostics"][0].as_str().unwrap();
    assert!(
        message.contains(&format!("at byte {offending} ")),
        "{message}"
    );
}

#[test]
fn missing_file_and_bad_point_exit_2() {
    let (code, _, _) = run_report(&["classify", "/nonexistent/problem.json", "--at", "0,0"]);
    assert_eq!(code, 2);
    let (code, _, _) = run_report(&["classify", &problem("circle.json"), "--at", "0,0,0"]);
    assert_eq!(code, 2);
}

#[test]
fn certify_off_critical_point_exits_3() {
    let (code, r, _) = run_report(&["certify", &problem("circle.json"), "--at", "1,0"]);
    assert_eq!(code, 3);
    assert_eq!(r["stationarity"]["is_critical"], false);
}

#[test]
fn certify_at_critical_point_includes_witness() {
    let (code, r, _) = run_report(&[
        "certify",
        &problem("sphere_slice.json"),
        "--at",
        "0.6,0.8,0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["certificate"]["kind"], "ill_posed");
    assert!(r["witness"]["tangent_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn reports_are_byte_for_byte_reproducible() {
    for args in [
        vec!["solve", "PROBLEM"],
        vec![
            "classify",
            "PROBLEM",
            "--at",
            "0.6,0.8,0",
            "--probes",
            "16",
            "--seed",
            "3",
        ],
    ] {
        let path = problem("sphere_slice.json");
        let args: Vec<&str> = args
            .iter()
            .map(|a| if *a == "PROBLEM" { path.as_str() } else { a })
            .collect();
        let (_, _, first) = run_report(&args);
        let (_, _, second) = run_report(&args);
        assert_eq!(first, second);
    }
}

#[test]
fn timings_are_opt_in() {
    let (_, r, _) = run_report(&["solve", &problem("circle.json")]);
    assert!(r.get("timings").is_none());
    let (_, r, _) = run_report(&["--timings", "solve", &problem("circle.json")]);
    assert!(r["timings"]["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn without_out_json_goes_to_stdout() {
    let output = gencrit(&["classify", &problem("circle.json"), "--at", "0.6,0.8"]);
    assert!(output.status.success());
    let r: Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(r["command"]["name"], "classify");
    assert!(String::from_utf8_lossy(&output.stderr).contains("status: ok"));
}

#[test]
fn problem_files_match_built_in_problems() {
    let circle = load_problem(&problems_dir().join("circle.json")).unwrap();
    assert_eq!(circle.problem, suite::circle());
    let slice = load_problem(&problems_dir().join("sphere_slice.json")).unwrap();
    assert_eq!(slice.problem, suite::sphere_slice(7.0));
    let ellipse = load_problem(&problems_dir().join("ellipse.json")).unwrap();
    assert_eq!(ellipse.problem, suite::ellipse());
}
