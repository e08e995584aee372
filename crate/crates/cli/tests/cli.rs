use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_essential-rewrite"))
        .args(args)
        .env_remove("ESSENTIAL_REWRITE_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(stdout(o).trim()).expect("valid JSON")
}

fn sequence_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn reduce_head_stops_at_head_normal_form() {
    let o = run(&["reduce", "I (x (I I))", "--system", "head", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["steps"].as_array().unwrap().len(), 1);
    assert_eq!(v["outcome"], "essential-normal");
    let end = run(&["parse", "x (I I)"]);
    assert_eq!(v["end"].as_str().unwrap(), stdout(&end).trim());
}

#[test]
fn reduce_normal_term_takes_no_steps() {
    let o = run(&["reduce", "(\\x.x)", "--system", "lo"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("after 0 steps"));
}

#[test]
fn reduce_divergent_term_exhausts_fuel() {
    let o = run(&["reduce", "(\\x.x x)(\\x.x x)", "--system", "lo", "--fuel", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 10);
}

#[test]
fn reduce_ll_prints_levels_and_plain_beta_works() {
    let o = run(&["reduce", "x (x (I I)) (I I)", "--system", "ll"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().contains("level 1"));
    let o = run(&["reduce", "I (x (I I))", "--system", "beta", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["outcome"], "normal-form-reached");
    assert_eq!(json(&o)["steps"][0]["kind"], "plain");
}

#[test]
fn parse_errors_exit_1() {
    let o = run(&["reduce", "(\\x.", "--system", "lo"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("byte"));
    let o = run(&["reduce", "x", "--system", "fast"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn prelude_can_be_disabled() {
    let o = run(&["parse", "I x", "--no-prelude"]);
    assert_eq!(stdout(&o).trim(), "I x");
    let o = run(&["parse", "I x"]);
    assert_eq!(stdout(&o).trim(), "(\\z.z) x");
}

#[test]
fn level_examples() {
    for (term, expected) in [("x", "inf"), ("(\\x.I I) y", "0"), ("x (x (I I)) (I I)", "1")] {
        let o = run(&["level", term, "--output", "json"]);
        assert_eq!(o.status.code(), Some(0));
        let v = json(&o);
        assert_eq!(v["least_level"].to_string().trim_matches('"'), expected, "{term}");
    }
    let o = run(&["level", "x"]);
    assert_eq!(stdout(&o).trim(), "least level: ∞");
}

#[test]
fn factorize_head_example() {
    let f = sequence_file("I (x (I I))\npos R.R\npos root\n");
    let o = run(&["factorize", f.path().to_str().unwrap(), "--system", "head", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["essential"]["steps"].as_array().unwrap().len(), 1);
    assert_eq!(v["inessential"]["steps"].as_array().unwrap().len(), 1);
    assert_eq!(v["essential"]["steps"][0]["position"], "root");
    assert_eq!(v["inessential"]["steps"][0]["kind"], "inessential");
}

#[test]
fn factorize_already_factorized_and_empty() {
    let f = sequence_file("I (x (I I))\npos root\npos R\n");
    let o = run(&["factorize", f.path().to_str().unwrap(), "--system", "head", "--output", "json"]);
    let v = json(&o);
    let positions: Vec<&str> = ["essential", "inessential"]
        .iter()
        .flat_map(|k| v[k]["steps"].as_array().unwrap().iter().map(|s| s["position"].as_str().unwrap()))
        .collect();
    assert_eq!(positions, ["root", "R"]);

    let f = sequence_file("x y\n");
    let o = run(&["factorize", f.path().to_str().unwrap(), "--output", "json"]);
    let v = json(&o);
    assert!(v["essential"]["steps"].as_array().unwrap().is_empty());
    assert!(v["inessential"]["steps"].as_array().unwrap().is_empty());
}

#[test]
fn factorize_names_the_bad_line() {
    let f = sequence_file("I (x (I I))\npos R.R\npos L\n");
    let o = run(&["factorize", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let f = sequence_file("I (x (I I))\nstep root\n");
    let o = run(&["factorize", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn check_examples_pass() {
    let o = run(&["check", "determinism", "--system", "head", "--size", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS determinism"));
    let o = run(&["check", "diamond", "--system", "weak-cbv", "--size", "9", "--parallel", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["check", "subst-index", "--flavor", "cbn", "--samples", "500", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"], "PASS");
    assert_eq!(v["checked_count"], 500);
}

#[test]
fn check_errors() {
    assert_eq!(run(&["check", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["check", "determinism", "--system", "weak-cbv"]).status.code(), Some(1));
}

#[test]
fn check_reports_inconclusive_on_tiny_budgets() {
    let o = run(&["check", "normalization", "--system", "ll", "--size", "7", "--fuel", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("INCONCLUSIVE"));
}

#[test]
fn json_reports_round_trip_and_runs_are_reproducible() {
    let args = ["check", "split-index", "--samples", "60", "--seed", "7", "--output", "json", "--parallel", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    for line in stdout(&a).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, again);
        assert_eq!(v["result"], "PASS");
    }
    assert_eq!(stdout(&a).lines().count(), 2);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let cfg = sequence_file("fuel = 3\noutput = json\n");
    let o = Command::new(env!("CARGO_BIN_EXE_essential-rewrite"))
        .args(["reduce", "Omega", "--system", "lo"])
        .env("ESSENTIAL_REWRITE_CONFIG", cfg.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["steps"].as_array().unwrap().len(), 3);
    let o = Command::new(env!("CARGO_BIN_EXE_essential-rewrite"))
        .args(["reduce", "Omega", "--system", "lo", "--fuel", "5"])
        .env("ESSENTIAL_REWRITE_CONFIG", cfg.path())
        .output()
        .unwrap();
    assert_eq!(json(&o)["steps"].as_array().unwrap().len(), 5);
    let bad = sequence_file("fuel = lots\n");
    let o = Command::new(env!("CARGO_BIN_EXE_essential-rewrite"))
        .args(["reduce", "x"])
        .env("ESSENTIAL_REWRITE_CONFIG", bad.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
