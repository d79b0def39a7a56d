//! End-to-end runs of the `pgp` binary.

mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use common::*;
use pgraph::scenario::{Scenario, ScenarioError};

fn pgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgp"))
        .args(args)
        .env_remove("PGP_DEPTH")
        .output()
        .expect("pgp runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn path(name: &str) -> String {
    fixture_path(name).display().to_string()
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let wheelchair = path("wheelchair.json");
    let violated = pgp(&["check", &wheelchair, "--case", "I"]);
    assert_eq!(violated.status.code(), Some(1));
    let text = stdout(&violated);
    assert!(text.contains("VIOLATED on 1 estimate(s)"), "{text}");
    assert!(text.contains("estimate {M_occ}"), "{text}");

    let held = pgp(&["check", &wheelchair, "--case", "IV", "--mode", "member"]);
    assert_eq!(held.status.code(), Some(0));
    assert!(stdout(&held).contains("SATISFIED"));
}

#[test]
fn formula_override_is_checked_instead() {
    let out = pgp(&[
        "check",
        &path("wheelchair.json"),
        "--case",
        "I",
        "--formula",
        "hall | !hall",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("stipulation: hall | !hall"));
}

#[test]
fn malformed_input_exits_with_two() {
    let bad = scratch("malformed.json");
    std::fs::write(&bad, "{\"schema\": 1, \"world\": ").unwrap();
    let out = pgp(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let missing = pgp(&["closure", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_formula = pgp(&["check", &path("wheelchair.json"), "--formula", "(hall |"]);
    assert_eq!(bad_formula.status.code(), Some(2));
}

#[test]
fn check_without_a_filter_is_an_error() {
    let out = pgp(&["check", &path("f1.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn closure_reports_unsolvable_worlds() {
    let out = pgp(&["closure", &path("f1.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("no solving plan exists"));

    let solvable = pgp(&["closure", &path("f2prime.json")]);
    assert_eq!(solvable.status.code(), Some(0));
    assert!(stdout(&solvable).contains("{o0} -[y1]-> {g}"));
}

#[test]
fn closure_json_output_parses() {
    let target = scratch("f2prime-closure.json");
    let out = pgp(&[
        "closure",
        &path("f2prime.json"),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(value["coloring"]["{a0}"], "green");
}

#[test]
fn simulate_is_reproducible_per_seed() {
    let args = ["simulate", &path("wheelchair.json"), "--seed", "7"];
    let (a, b) = (pgp(&args), pgp(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("outcome: terminated at goal"));
}

#[test]
fn dot_draws_action_vertices_as_boxes() {
    let s = fixture("wheelchair.json");
    let actions = s
        .problem()
        .unwrap()
        .world()
        .vertices()
        .filter(|(_, k)| *k == pgraph::Kind::Action)
        .count();
    let out = pgp(&["dot", &path("wheelchair.json"), "--color"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches("shape=box").count(), actions);
}

#[test]
fn sde_lists_singleton_subsets() {
    let out = pgp(&["sde", &path("wheelchair.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("{M_occ} action"));
}

#[test]
fn fixtures_round_trip_byte_for_byte() {
    for file in FIXTURES {
        let original = std::fs::read_to_string(fixture_path(file)).unwrap();
        let copy = scratch(file);
        Scenario::from_json(&original).unwrap().save(&copy).unwrap();
        assert_eq!(std::fs::read_to_string(&copy).unwrap(), original, "{file}");
    }
}

#[test]
fn dangling_edges_are_reported_with_their_section() {
    let text = std::fs::read_to_string(fixture_path("f1.json"))
        .unwrap()
        .replacen("\"dst\": \"d\"", "\"dst\": \"nowhere\"", 1);
    match Scenario::from_json(&text) {
        Err(ScenarioError::DanglingReference {
            section, vertex, ..
        }) => {
            assert_eq!(section, "world");
            assert_eq!(vertex, "nowhere");
        }
        other => panic!("expected a dangling reference, got {other:?}"),
    }
}
