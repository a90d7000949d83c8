use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twistlab"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON: {e}\n{}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn eval_sqrt_on_the_second_sheet() {
    let s = scenario("sqrt");
    let o = run(&["eval", "--scenario", s.to_str().unwrap(), "--p1", "0", "--p2", "0", "--p12", "1", "--z1", "2,0", "--z2", "0.5,0"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let value = &v["values"][0]["value"];
    assert!((value[0].as_f64().unwrap() + 1.5f64.sqrt()).abs() < 1e-12, "{v}");
    assert!(value[1].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["bt"], serde_json::json!([0, 0, 1]));
}

#[test]
fn negative_arguments_parse() {
    let s = scenario("sqrt");
    let o = run(&["eval", "--scenario", s.to_str().unwrap(), "--p12", "-1", "--z1", "-2,0.5", "--z2", "0.5,-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_thm46_on_abelian_tower() {
    let s = scenario("abelian-tower");
    let o = run(&["verify", "--scenario", s.to_str().unwrap(), "--check", "thm46", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<Value> = String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["pass"], Value::Bool(true));
    assert_eq!(lines[0]["seed"], 7);
    for key in ["name", "pass", "maxDefect", "tol", "samples", "seed"] {
        assert!(lines[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let s = scenario("random-42");
    let args = ["verify", "--scenario", s.to_str().unwrap(), "--seed", "3", "--threads", "4"];
    let a = run(&args);
    let b = run(&["verify", "--scenario", s.to_str().unwrap(), "--seed", "3", "--threads", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn controls_are_reported_as_failures_but_expected() {
    let s = scenario("controls");
    let o = run(&["verify", "--scenario", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for line in String::from_utf8(o.stdout).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["pass"], Value::Bool(false), "{v}");
        assert_eq!(v["expectFail"], Value::Bool(true));
        assert!(v.get("worstPoint").is_some());
    }
}

#[test]
fn genuine_failure_exits_one_with_json() {
    let s = scenario("sqrt");
    let o = run(&["verify", "--scenario", s.to_str().unwrap(), "--check", "duality", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8(o.stdout).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(v["pass"], Value::Bool(false));
}

#[test]
fn omega_transforms_compose_to_identity() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("abelian-tower");
    let once = dir.path().join("once.json");
    let twice = dir.path().join("twice.json");
    let o = run(&["transform", "--scenario", s.to_str().unwrap(), "--op", "omega+", "--out", once.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    stdout_json(&o);
    let o = run(&["transform", "--scenario", once.to_str().unwrap(), "--op", "omega-", "--out", twice.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let input = twistlab::cli::load_scenario(&s).unwrap();
    let back = twistlab::cli::load_scenario(&twice).unwrap();
    for (f, g) in input.family.f.iter().zip(&back.family.f) {
        assert!(f.coefficient_distance(g, 1e-12) < 1e-12);
    }
    assert_eq!(input.labels, back.labels);
}

#[test]
fn transform_to_stdout_is_a_scenario() {
    let s = scenario("sqrt");
    let o = run(&["transform", "--scenario", s.to_str().unwrap(), "--op", "a-"]);
    assert_eq!(o.status.code(), Some(0));
    let sc = twistlab::cli::parse_scenario(&o.stdout).unwrap();
    assert_eq!(sc.family.dim(), 1);
}

#[test]
fn expand_and_continue_report_defects() {
    let s = scenario("abelian-tower");
    let o = run(&["expand", "--scenario", s.to_str().unwrap(), "--region", "product", "--z1", "1,0.3", "--z2", "0.2,0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert_eq!(v["inWindow"], Value::Bool(true));
    assert!(v["maxDefect"].as_f64().unwrap() < 1e-9);

    let o = run(&["continue", "--scenario", s.to_str().unwrap(), "--path", "gamma1", "--steps", "512"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["values"][0]["end"], serde_json::json!([-1, 0, -1]));
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn input_errors_exit_two_on_stderr_only() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("sqrt")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["automorphisms"].as_object_mut().unwrap().remove("g3");
    let missing = dir.path().join("missing.json");
    std::fs::write(&missing, doc.to_string()).unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"version\": ").unwrap();

    let cases: Vec<Vec<String>> = vec![
        vec!["eval".into(), "--scenario".into(), missing.display().to_string(), "--z1".into(), "1,0".into(), "--z2".into(), "2,0".into()],
        vec!["verify".into(), "--scenario".into(), broken.display().to_string()],
        vec!["eval".into(), "--scenario".into(), "/nonexistent.json".into(), "--z1".into(), "1".into(), "--z2".into(), "2".into()],
        vec!["eval".into(), "--z1".into(), "1,2,3".into()],
        vec!["continue".into(), "--scenario".into(), scenario("sqrt").display().to_string(), "--path".into(), "nope".into()],
    ];
    for args in &cases {
        let o = bin().args(args).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["eval", "--scenario", missing.to_str().unwrap(), "--z1", "1,0", "--z2", "2,0"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("automorphisms.g3"));
}

#[test]
fn evaluation_at_a_singularity_is_an_input_error() {
    let s = scenario("sqrt");
    let o = run(&["eval", "--scenario", s.to_str().unwrap(), "--z1", "0,0", "--z2", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
}
