use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ntccrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntccrt"))
        .args(args)
        .env_remove("PORT")
        .output()
        .expect("binary runs")
}

fn outs(trace: &Path) -> Vec<u64> {
    fs::read_to_string(trace)
        .unwrap()
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["out"].as_u64())
        .collect()
}

#[test]
fn improvise_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("abb.notes");
    fs::write(&notes, "a\nb\nb\n").unwrap();
    let trace = dir.path().join("trace.jsonl");
    let out = ntccrt(&[
        "improvise",
        "--notes",
        notes.to_str().unwrap(),
        "--rho",
        "1.0",
        "--units",
        "10",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(outs(&trace), vec![0, 1, 1]);
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 10);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out: a b b"));
}

#[test]
fn replay_reproduces_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("riff.notes");
    fs::write(&notes, "a\nb\na\nc\nb\na\n").unwrap();
    let first = dir.path().join("first.jsonl");
    let second = dir.path().join("second.jsonl");
    let common = ["--rho", "nondet", "--seed", "5", "--units", "30"];
    let mut args = vec!["improvise", "--notes", notes.to_str().unwrap(), "--out", first.to_str().unwrap()];
    args.extend(common);
    assert!(ntccrt(&args).status.success());
    let mut args = vec!["improvise", "--replay", first.to_str().unwrap(), "--out", second.to_str().unwrap()];
    args.extend(common);
    let out = ntccrt(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(outs(&first), outs(&second));
    assert!(!outs(&first).is_empty());
}

#[test]
fn learn_prints_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("abb.notes");
    fs::write(&notes, "# fixture\na\nb\nb\n").unwrap();
    let out = ntccrt(&["learn", "--notes", notes.to_str().unwrap(), "--alphabet", "2"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["S"], serde_json::json!([-1, 0, 0, 2]));
    assert_eq!(json["delta"], serde_json::json!([[0, 0, 1], [0, 1, 2], [1, 1, 2], [2, 1, 3]]));
}

#[test]
fn malformed_notes_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("bad.notes");
    fs::write(&notes, "a\nb\nnot-a-note\n").unwrap();
    let out = ntccrt(&["improvise", "--notes", notes.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = ntccrt(&["learn", "--notes", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(ntccrt(&["improvise", "--bogus"]).status.code(), Some(2));
    assert_eq!(ntccrt(&["converge", "--rho", "x"]).status.code(), Some(2));
    assert_eq!(ntccrt(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("ok.notes");
    fs::write(&notes, "a\n").unwrap();
    let out = ntccrt(&["improvise", "--notes", notes.to_str().unwrap(), "--rho", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ntccrt(&["improvise", "--notes", notes.to_str().unwrap(), "--tick", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_and_converge_report() {
    let out = ntccrt(&["bench", "--units", "20", "--replicas", "2", "--json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["durations_ms"].as_array().unwrap().len(), 20);

    let out = ntccrt(&["converge", "--rho", "1.0,0.7", "--t", "30", "--trials", "20", "--json"]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["q_hat"], 0.0);
}

#[test]
fn config_file_feeds_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("session.json");
    fs::write(&cfg, r#"{"alphabetSize": 3, "rho": 1.0, "maxUnits": 8}"#).unwrap();
    let notes = dir.path().join("n.notes");
    fs::write(&notes, "0\n2\n1\n").unwrap();
    let trace = dir.path().join("t.jsonl");
    let out = ntccrt(&[
        "improvise",
        "--config",
        cfg.to_str().unwrap(),
        "--notes",
        notes.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(outs(&trace), vec![0, 2, 1]);
    // Outside the configured alphabet.
    fs::write(&notes, "0\n3\n").unwrap();
    let out = ntccrt(&["improvise", "--config", cfg.to_str().unwrap(), "--notes", notes.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
