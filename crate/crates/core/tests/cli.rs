mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::models_dir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ta-repair")).args(args).output().unwrap()
}

fn model(name: &str) -> String {
    models_dir().join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn safe_model(dir: &Path) -> String {
    let text = std::fs::read_to_string(model("client_db.json")).unwrap();
    let fixed = text.replacen("w <= 2", "w <= 1", 1);
    assert_ne!(text, fixed);
    let path = dir.join("safe.json");
    std::fs::write(&path, fixed).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn check_reports_violation_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = cli(&["check", &model("client_db.json"), "--trace-out", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "violated, trace of 3 steps\n");
    assert!(std::fs::read_to_string(trace).unwrap().contains("req"));
}

#[test]
fn check_accepts_a_safe_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["check", &safe_model(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "safe\n");
}

#[test]
fn check_runs_out_of_states() {
    let o = cli(&["check", &model("client_db.json"), "--max-states", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cli(&["check", "/nonexistent/model.json"]).status.code(), Some(2));
    assert_eq!(
        cli(&["repair", &model("client_db.json"), "--kind", "sideways"]).status.code(),
        Some(2)
    );
    assert_eq!(cli(&[]).status.code(), Some(2));
}

#[test]
fn bound_repair_writes_files_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = cli(&[
        "repair",
        &model("client_db.json"),
        "--kind",
        "bound",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let first = std::fs::read_to_string(out.join("repair_bound_001.json")).unwrap();
    assert!(first.contains("w <= 1"));
    assert!(out.join("trace.json").exists());
    assert_eq!(std::fs::read_to_string(out.join("report.txt")).unwrap(), stdout(&o));
    assert!(stdout(&o).contains("w <= 2 -> w <= 1"));
}

#[test]
fn repair_accepts_a_given_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    cli(&["check", &model("client_db.json"), "--trace-out", trace.to_str().unwrap()]);
    let a = cli(&[
        "repair",
        &model("client_db.json"),
        "--kind",
        "urgent",
        "--out",
        dir.path().join("a").to_str().unwrap(),
    ]);
    let b = cli(&[
        "repair",
        &model("client_db.json"),
        "--kind",
        "urgent",
        "--tdt",
        trace.to_str().unwrap(),
        "--out",
        dir.path().join("b").to_str().unwrap(),
    ]);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(dir.path().join("b").join("witness_urgent_001.json").exists());
}

#[test]
fn repair_all_kinds_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        cli(&[
            "repair",
            &model("client_db.json"),
            "--kind",
            "all",
            "--out",
            dir.path().join(sub).to_str().unwrap(),
        ])
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    for kind in ["bound", "operator", "clockref", "reset", "urgent"] {
        assert!(stdout(&a).contains(&format!("== {kind} ==")), "{kind}");
    }
}

#[test]
fn repair_of_a_safe_model_needs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "repair",
        &safe_model(dir.path()),
        "--kind",
        "bound",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "no violation found\n");
}

#[test]
fn variable_blocking_changes_operator_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = cli(&[
        "repair",
        &model("client_db.json"),
        "--kind",
        "operator",
        "--blocking",
        "variables",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout(&o).contains("candidates: 2"));
}

#[test]
fn admissible_compares_languages() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    cli(&[
        "repair",
        &model("client_db.json"),
        "--kind",
        "urgent",
        "--out",
        out.to_str().unwrap(),
    ]);
    let o = cli(&[
        "admissible",
        &model("client_db.json"),
        out.join("repair_urgent_001.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "inadmissible, witness: [cancel]\n");
    let same = cli(&["admissible", &model("client_db.json"), &model("client_db.json")]);
    assert_eq!(same.status.code(), Some(0));
    assert_eq!(stdout(&same), "admissible\n");
}

#[test]
fn seed_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = cli(&["seed", &model("timer.json"), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (
            std::fs::read_to_string(out.join("campaign.csv")).unwrap(),
            std::fs::read_to_string(out.join("report.txt")).unwrap(),
        )
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert!(a.0.starts_with("scope,Sd,T,Ln,R,A,S,O,Vr,Cn\n"));
    assert!(a.0.lines().last().unwrap().starts_with("total,"));
}
