use std::io::Write;
use std::process::{Command, Output};

use convsched::report::REPORT_HEADER;

const SUITE: &str = r#"{
  "name": "tiny",
  "layers": [
    {"name": "a", "out_h": 6, "out_w": 6, "k_h": 3, "k_w": 3, "stride": 1, "c_in": 3, "c_out": 4},
    {"name": "b", "out_h": 4, "out_w": 5, "k_h": 1, "k_w": 1, "stride": 2, "c_in": 4, "c_out": 2}
  ]
}"#;

const SCHEDULE: &str = r#"{"order":["FX","FY","SX","SY","IF","OF"],"tiles":{"mss":2,"css":3,"iss":3,"jss":6},"buffering":{"I":3,"W":4,"O":5}}"#;

fn suite_file() -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(SUITE.as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convsched"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sweep_writes_csv_with_header() {
    let file = suite_file();
    let path = file.path().to_str().unwrap();
    let out = run(&["sweep", "--layer-file", path, "--budgets", "64,256"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), REPORT_HEADER.join(","));
    // 2 layers × (3 models + ideal) × 2 budgets, plus the same for the aggregate.
    assert_eq!(lines.count(), 3 * 4 * 2);
    assert!(text.contains("tiny,ALL,ours,256,"));
}

#[test]
fn reruns_are_identical_and_out_file_matches_stdout() {
    let file = suite_file();
    let path = file.path().to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("sweep.csv");
    let args = ["sweep", "--layer-file", path, "--budgets", "32..512"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", target.to_str().unwrap()]);
    assert_eq!(run(&with_out).status.code(), Some(0));
    assert_eq!(std::fs::read(&target).unwrap(), first.stdout);
}

#[test]
fn analyze_and_validate_agree() {
    let file = suite_file();
    let path = file.path().to_str().unwrap();
    let analyze = run(&[
        "analyze",
        "--layer-file",
        path,
        "--layer",
        "a",
        "--budget",
        "1K",
        "--schedule",
        SCHEDULE,
        "--format",
        "csv",
    ]);
    assert_eq!(
        analyze.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&analyze.stderr)
    );
    let validate = run(&[
        "validate",
        "--layer-file",
        path,
        "--layer",
        "a",
        "--schedule",
        SCHEDULE,
        "--format",
        "csv",
    ]);
    assert_eq!(
        validate.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&validate.stderr)
    );
    let analyze = stdout(&analyze);
    let mut lines = analyze.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let row: Vec<_> = lines.next().unwrap().split(',').collect();
    let total = row[header.iter().position(|h| *h == "total").unwrap()];
    let validate = stdout(&validate);
    let line = validate.lines().find(|l| l.starts_with("total,")).unwrap();
    assert_eq!(line, format!("total,{total},{total},0.0000"));
}

#[test]
fn exit_codes() {
    let file = suite_file();
    let path = file.path().to_str().unwrap();
    let search = |extra: &[&str]| {
        let mut args = vec!["search", "--layer-file", path, "--layer", "a", "--budget", "512"];
        args.extend_from_slice(extra);
        run(&args).status.code()
    };
    assert_eq!(search(&[]), Some(0));
    assert_eq!(search(&["--model", "nope"]), Some(1));
    assert_eq!(
        run(&["search", "--layer-file", path, "--budget", "512"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["search", "--layer-file", path, "--layer", "a", "--budget", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["sweep", "--layer-file", "/nonexistent/suite.json"]).status.code(),
        Some(2)
    );
    let schedule_error = run(&[
        "analyze",
        "--layer-file",
        path,
        "--layer",
        "a",
        "--budget",
        "1K",
        "--schedule",
        "{}",
    ]);
    assert_eq!(schedule_error.status.code(), Some(2));
    let capped = run(&[
        "validate",
        "--layer-file",
        path,
        "--layer",
        "a",
        "--schedule",
        SCHEDULE,
        "--oracle-cap",
        "10",
    ]);
    assert_eq!(capped.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&capped.stderr).contains("cap"));
}

#[test]
fn case_study_and_distribution_run_on_builtin_suites() {
    let ratios = run(&["case-study", "--suite", "alexnet", "--format", "csv"]);
    assert_eq!(ratios.status.code(), Some(0));
    let text = stdout(&ratios);
    assert!(text.starts_with("suite,layer,hwc_total,hwce_total,ratio"));
    assert_eq!(text.lines().count(), 1 + 5);

    let file = suite_file();
    let dist = run(&[
        "distribution",
        "--layer-file",
        file.path().to_str().unwrap(),
        "--budgets",
        "64,4K",
    ]);
    assert_eq!(dist.status.code(), Some(0));
    assert_eq!(stdout(&dist).lines().count(), 3);
}
