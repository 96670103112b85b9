use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lapmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lapmax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_path_and_check_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "p3.txt", "3 vertices; edges 12,23\n");
    let cert = dir.path().join("cert.json");
    let cert = cert.to_str().unwrap();
    let out = lapmax(&["solve", "--graph", &graph, "--init", "uniform", "--out", cert, "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert!((r["lambda1"].as_f64().unwrap() - 16.0).abs() < 1e-8);
    assert_eq!(r["termination"], "converged");
    assert_eq!(r["pass"], true);

    let lengths = write(dir.path(), "l.json", "[0.25, 0.25]");
    let out = lapmax(&["certify", "--graph", &graph, "--init", &lengths, "--check", cert]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    // doubling the map breaks the certificate equation
    let mut record: Value = serde_json::from_str(&fs::read_to_string(cert).unwrap()).unwrap();
    for p in record["map"].as_array_mut().unwrap() {
        let x = p[0].as_f64().unwrap();
        p[0] = Value::from(2.0 * x);
    }
    let bad = write(dir.path(), "bad.json", &record.to_string());
    let out = lapmax(&["certify", "--graph", &graph, "--init", &lengths, "--check", &bad]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn certify_builds_star_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(
        dir.path(),
        "k13.json",
        r#"{"vertices": 4, "edges": [[1, 2], [1, 3], [1, 4]], "lengths": [0.1666666666666667, 0.1666666666666667, 0.1666666666666666]}"#,
    );
    let out = lapmax(&["certify", "--graph", &graph, "--json"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["multiplicity"], 2);
    assert_eq!(r["feasibility"]["status"], "feasible");
    assert!(r["verification"]["max_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn certify_reports_infeasible_cone() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "p3.txt", "3 vertices; edges 12,23");
    let lengths = write(dir.path(), "l.json", "[0.1, 0.4]");
    let out = lapmax(&["certify", "--graph", &graph, "--init", &lengths, "--json"]);
    assert_eq!(code(&out), 1);
    let r = json(&out);
    assert_eq!(r["feasibility"]["status"], "infeasible");
    assert!(r["feasibility"]["witness"].is_array());
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "p4.txt", "4 vertices; edges 12,23,34");
    let run = || lapmax(&["solve", "--graph", &graph, "--seed", "7", "--json"]).stdout;
    assert_eq!(run(), run());
}

#[test]
fn divergence_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.txt", "4 vertices; edges 12,13,14,23");
    let out = lapmax(&["solve", "--graph", &graph, "--json"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["termination"], "boundary_divergence");
    assert!(r["lambda1"].as_f64().unwrap() > 1000.0);
}

#[test]
fn ghw_on_weighted_square() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(
        dir.path(),
        "c4.json",
        r#"{"vertices": 4, "edges": [[1, 2], [2, 3], [3, 4], [1, 4]], "lengths": [1, 0.5, 2, 1], "vertex_weights": [0.1, 0.2, 0.3, 0.4]}"#,
    );
    let out = lapmax(&["ghw", "--graph", &graph, "--json"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert!(r["dual"]["gap"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(r["dual"]["weak_duality"], true);
}

#[test]
fn scan_spec_writes_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "c3.txt", "3 vertices; edges 12,23,13");
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"base": [0.1, 0.1, 0.3], "axes": [
            {"name": "a", "direction": [1, 0, -1], "min": 0.0, "max": 0.1, "points": 11},
            {"name": "b", "direction": [0, 1, -1], "min": 0.0, "max": 0.1, "points": 11}]}"#,
    );
    let csv = |name: &str| {
        let path = dir.path().join(name);
        let out = lapmax(&["scan", "--graph", &graph, "--spec", &spec, "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(path).unwrap()
    };
    let first = csv("a.csv");
    assert_eq!(first, csv("b.csv"));
    let text = String::from_utf8(first).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 122);
    assert_eq!(lines[0], "a,b,lambda1,multiplicity,divergent");
}

#[test]
fn scan_preset_to_stdout() {
    let out = lapmax(&["scan", "--preset", "p3", "--points", "5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    // a = 0 and a = 1/2 are on the boundary
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().any(|l| l.starts_with("0.25,16,")));
}

#[test]
fn examples_all_pass() {
    let out = lapmax(&["examples", "--all"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 7);
    assert!(text.contains("7/7 fixtures passed"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&lapmax(&["examples", "nope"])), 2);
    assert_eq!(code(&lapmax(&["solve", "--graph", "/nonexistent/graph.txt"])), 2);
    assert_eq!(code(&lapmax(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "p3.txt", "3 vertices; edges 12,23");
    let unnormalized = write(dir.path(), "l.json", "[1.0, 1.0]");
    assert_eq!(code(&lapmax(&["solve", "--graph", &graph, "--init", &unnormalized])), 2);
    let bad_graph = write(dir.path(), "bad.txt", "3 vertices; edges 12,12");
    assert_eq!(code(&lapmax(&["solve", "--graph", &bad_graph])), 2);
    // an edge of length 1e-17 leaves lambda1 below the zero threshold
    let tiny = write(dir.path(), "tiny.json", "[1e-17, 0.5]");
    assert_eq!(code(&lapmax(&["certify", "--graph", &graph, "--init", &tiny])), 3);
}
