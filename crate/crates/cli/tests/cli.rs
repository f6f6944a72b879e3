use std::path::PathBuf;
use std::process::{Command, Output};

use combforge::channels::random_channel;
use combforge::io::{to_json, write_json};
use combforge::random::{random_pure_state, trial_rng};
use combforge::{Hermitian, Layout};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_combforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8(o.stdout.clone()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("combforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn lay(f: &[(&str, usize)]) -> Layout {
    Layout::new(f.iter().map(|(l, d)| (*l, *d))).unwrap()
}

#[test]
fn corollary_campaign_passes() {
    let o = run(&["corollary", "--trials", "50", "--rounds", "2", "--dims", "2", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let l = lines(&o);
    assert_eq!(l.len(), 52);
    assert_eq!(l[0]["type"], "header");
    let summary = l.last().unwrap();
    assert_eq!(summary["passed"], 50);
    assert!(summary["worst"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn one_dimensional_corollary() {
    let o = run(&["corollary", "--dims", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rec = &lines(&o)[1]["record"];
    let (f, r) = (rec["forward"].as_f64().unwrap(), rec["reversed"].as_f64().unwrap());
    // a unit vector on a one-dimensional space pairs to 1 with the only strategy
    assert!((f - 1.0).abs() < 1e-8 && (r - 1.0).abs() < 1e-8);
}

#[test]
fn reports_are_reproducible_apart_from_the_timestamp() {
    let args = ["corollary", "--trials", "4", "--dims", "2,3", "--seed", "11"];
    let strip = |o: Output| {
        let mut l = lines(&o);
        l[0]["timestamp"] = Value::Null;
        l
    };
    assert_eq!(strip(run(&args)), strip(run(&args)));
}

#[test]
fn identity_failures_set_exit_code() {
    let o = run(&["corollary", "--trials", "2", "--rounds", "2", "--dims", "2", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(lines(&o).last().unwrap()["identity_failures"], 2);
}

#[test]
fn desk_bounds_need_override() {
    let o = run(&["corollary", "--dims", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--allow-large"));
    assert_eq!(run(&["corollary", "--dims", "4", "--allow-large"]).status.code(), Some(0));
}

#[test]
fn size_cap_comes_from_environment() {
    let o = bin().args(["corollary", "--dims", "2"]).env("COMBFORGE_MAX_DIM", "4").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(lines(&o)[1]["error"].as_str().unwrap().contains("cap 4"));
}

#[test]
fn solve_reads_an_objective_file() {
    let path = scratch("objective.json");
    let h = Hermitian::identity(&lay(&[("X1", 2), ("Y1", 3)])).scale(1.0 / 6.0);
    write_json(&path, &h).unwrap();
    let o = run(&["solve", "--objective", path.to_str().unwrap(), "--dims", "2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rec = &lines(&o)[1]["record"];
    assert!((rec["value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
    assert!(rec["optimizer"]["entries"].is_array());
}

#[test]
fn entropy_from_state_file_with_cut() {
    let path = scratch("state.json");
    let l = lay(&[("X", 2), ("Y", 3), ("Z", 2)]);
    let u = random_pure_state(&l, &mut trial_rng(3, 0));
    let pairs: Vec<(f64, f64)> = u.iter().map(|z| (z.re, z.im)).collect();
    std::fs::write(&path, serde_json::to_string(&pairs).unwrap()).unwrap();
    for cut in ["X", "Z"] {
        let o = run(&["entropy", "--state", path.to_str().unwrap(), "--dims", "2,3,2", "--cut", cut]);
        assert_eq!(o.status.code(), Some(0));
        let rec = &lines(&o)[1]["record"];
        assert_eq!(rec["layout"][0][0], cut);
        assert!(rec["identity_residual"].as_f64().unwrap() < 1e-4);
    }
}

#[test]
fn counterexample_found_in_default_search() {
    let o = run(&["counterexample", "--seed", "808"]);
    assert_eq!(o.status.code(), Some(0));
    let rec = &lines(&o)[1]["record"];
    assert!(rec["found"]["difference"].as_f64().unwrap() > 1e-2);
}

#[test]
fn simulate_reads_a_protocol_file() {
    let mut rng = trial_rng(9, 0);
    let alice = random_channel(&lay(&[("X1", 2)]), &lay(&[("Y1", 2)]), 2, &mut rng).unwrap();
    let b1 = random_channel(&Layout::scalar(), &lay(&[("X1", 2), ("W1", 2)]), 1, &mut rng).unwrap();
    let b2 = random_channel(&lay(&[("W1", 2), ("Y1", 2)]), &lay(&[("W2", 2)]), 4, &mut rng).unwrap();
    let effect = Hermitian::from_real_diagonal(&lay(&[("W2", 2)]), &[1.0, 0.25]).unwrap();
    let raw = |s: String| serde_json::from_str::<Value>(&s).unwrap();
    let protocol = serde_json::json!({
        "rounds": [["X1", 2, "Y1", 2]],
        "alice": [raw(to_json(&alice).unwrap())],
        "bob": [raw(to_json(&b1).unwrap()), raw(to_json(&b2).unwrap())],
        "effect": raw(to_json(&effect).unwrap()),
    });
    let path = scratch("protocol.json");
    std::fs::write(&path, protocol.to_string()).unwrap();
    let o = run(&["simulate", "--protocol", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = &lines(&o)[1]["record"];
    let p = rec["probability"].as_f64().unwrap();
    assert!((0.25..=1.0).contains(&p));
    assert!(rec["difference"].as_f64().unwrap() < 1e-10);
}

#[test]
fn reverse_writes_result_to_file() {
    let path = scratch("reverse.jsonl");
    let o = run(&["reverse", "--random", "--mode", "match", "--dims", "2,1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rec: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    let r = &rec["record"]["result"];
    assert_eq!(r["mode"], "match");
    assert!((r["forward_value"].as_f64().unwrap() - r["reversed_value"].as_f64().unwrap()).abs() < 1e-8);
    assert_eq!(r["reversed"]["rounds"][0][0], "Y1");
}

#[test]
fn text_format_and_bad_flags() {
    let o = run(&["--format", "text", "simulate", "--random", "--rounds", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("1/1 passed"));
    assert_eq!(run(&["corollary", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(run(&["corollary", "--dims", "2,2,2"]).status.code(), Some(1));
    assert_eq!(run(&["reverse"]).status.code(), Some(2));
}
