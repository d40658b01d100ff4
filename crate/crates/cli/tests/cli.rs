use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scoreforge"))
        .args(args)
        .env("SCOREFORGE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SPREAD: &str = r#"{
  "label": "spread",
  "structures": [
    {"d": 2, "label": "X", "atoms": [{"x": [0.75, 0.25], "p": 0.5}, {"x": [0.25, 0.75], "p": 0.5}]}
  ]
}"#;

const CONSTANT: &str = r#"{
  "label": "constant",
  "structures": [
    {"d": 2, "label": "C", "atoms": [{"x": [0.5, 0.5], "p": 1.0}]}
  ]
}"#;

#[test]
fn score_closed_forms() {
    let o = run(&["score", "--rule", "quadratic", "--omega", "1", "--x", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0");

    let o = run(&["score", "--rule", "log", "--omega", "1", "--x", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1");

    let o = run(&["score", "--rule", "log", "--omega", "1", "--x", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn score_rejects_bad_state() {
    let o = run(&["score", "--rule", "quadratic", "--omega", "3", "--x", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_writes_rule_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.json", SPREAD);
    let rule = dir.path().join("rule.json");
    let csv = dir.path().join("curve.csv");
    let o = run(&[
        "solve",
        "--collection",
        &c,
        "--out",
        rule.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--grid",
        "11",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(stderr(&o).lines().next().unwrap()).unwrap();
    assert_eq!(report["status"], "optimal");
    assert!(report["objective"].as_f64().unwrap() > 0.0);

    let curve = fs::read_to_string(&csv).unwrap();
    assert!(curve.starts_with("theta,H_opt,H_log,diff\n"));
    assert_eq!(curve.lines().count(), 12);

    let o = run(&["score", "--rule", rule.to_str().unwrap(), "--omega", "2", "--x", "0.25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!(v.is_finite());

    let o = run(&["gain", "--rule", rule.to_str().unwrap(), "--collection", &c]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().count() >= 2);
}

#[test]
fn degenerate_collection_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.json", CONSTANT);
    let o = run(&["solve", "--collection", &c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.json", "{\n  \"label\": ,\n}");
    let o = run(&["solve", "--collection", &c]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2 column"), "{err}");
}

#[test]
fn missing_input_is_an_error() {
    let o = run(&["solve", "--collection", "/nonexistent/c.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"omega": 2, "x": [0.0]}"#);
    let o = run(&["--config", &cfg, "score", "--rule", "log", "--omega", "1", "--x", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1");

    let bad = write(dir.path(), "bad.json", r#"{"no-such-flag": 1}"#);
    let o = run(&["--config", &bad, "score", "--rule", "log", "--omega", "1", "--x", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn figures_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = run(&["figures", "--out-dir", dir.to_str().unwrap(), "--grid", "41"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
}

#[test]
fn settle_quadratic_region_verifies() {
    let o = run(&["settle", "--rule", "quadratic", "--delta", "0.1", "--verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn asymptotic_beta_csv() {
    let o = run(&["asymptotic", "beta", "--n", "10,100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,scaled_obj,target,abs_err"));
    assert!(lines.next().unwrap().starts_with("10,0.71360909"));
}

#[test]
fn converge_log_table() {
    let o = run(&["converge-log", "--n", "5,10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("N,opt,max_abs_diff,center_diff,asymmetry\n5,"));
}
