use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

struct Output {
    code: i32,
    report: Value,
    stderr: String,
}

fn run(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_groupgraph")).args(args).current_dir(data()).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).expect("utf-8");
    Output {
        code: out.status.code().expect("exit code"),
        report: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stderr: String::from_utf8(out.stderr).expect("utf-8"),
    }
}

fn result(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
    out.report["result"].clone()
}

#[test]
fn loop_graph_validates() {
    let out = run(&["graph", "validate", "loop.json"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.report["status"], "ok");
    assert_eq!(out.report["result"]["counts"]["edges"], 1);
    assert_eq!(out.report["result"]["simple"], false);
}

#[test]
fn cycle_and_star_have_no_common_cover() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&["leighton", "common-cover", "cycle3.json", "star3.json", "--report", report.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(written["message"], "NoCommonCover: profile mismatch");
    assert_eq!(written["status"], "negative");
}

#[test]
fn symmetric_edge_blowup() {
    let r = result(&["blowup", "construct", "--verify", "sym3_edge_blowup.json"]);
    assert_eq!(r["counts"]["vertices"], 18);
    assert_eq!(r["expected_vertices"], 18);
    assert_eq!(r["verified"], true);
    assert_eq!(result(&["blowup", "verify", "sym3_edge_blowup.json"])["verified"], true);
    let n = result(&["blowup", "normalize", "sym3_edge_blowup.json"]);
    assert_eq!(n["unchanged"], false);
}

#[test]
fn blowup_refinement_and_quotient() {
    let r = result(&["blowup", "refine-tree", "sym3_edge_family.json"]);
    assert_eq!(r["tree"], true);
    let q = result(&["blowup", "quotient", "sym3_edge_family.json"]);
    // fibers of 6 over u and e collapse to the 2 cosets of A3; the 6 over v stay
    assert_eq!(q["quotient"]["vertices"], 10);
    assert_eq!(q["quotient_verified"], true);
    let out = run(&["blowup", "quotient", "sym3_edge_blowup.json"]);
    assert_eq!(out.code, 1);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert_eq!(run(&["leighton", "common-cover", "cycle4.json", "cycle6.json", "--report", p.to_str().unwrap()]).code, 0);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.find("\"command\"").unwrap() < text.find("\"config\"").unwrap());
    assert!(text.contains("\"max_degree\": 6"));
}

#[test]
fn emitted_graph_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let emitted = dir.path().join("g.json");
    assert_eq!(run(&["graph", "validate", "cycle3.json", "--emit", emitted.to_str().unwrap()]).code, 0);
    let original: Value = serde_json::from_str(&std::fs::read_to_string(data().join("cycle3.json")).unwrap()).unwrap();
    let again: Value = serde_json::from_str(&std::fs::read_to_string(&emitted).unwrap()).unwrap();
    assert_eq!(original, again);
}

#[test]
fn dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    assert_eq!(run(&["graph", "subdivide", "loop.json", "--dot", dot.to_str().unwrap()]).code, 0);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches("->").count(), 4);
    let out = run(&["group", "orbits", "sym3.json", "--dot", dot.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("produces no graph"));
}

#[test]
fn input_errors_carry_location() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"kind\": \"serre-graph\",\n  \"vertices\": [\"u\"\n}\n").unwrap();
    let out = run(&["graph", "validate", broken.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("broken.json:4:1"), "{}", out.stderr);

    let dangling = dir.path().join("dangling.json");
    std::fs::write(
        &dangling,
        "{\n  \"kind\": \"serre-graph\",\n  \"vertices\": [\"u\"],\n  \"darts\": [\n    {\"id\": \"e\", \"bar\": \"e2\", \"from\": \"u\", \"to\": \"u\"}\n  ]\n}\n",
    )
    .unwrap();
    let out = run(&["graph", "validate", dangling.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("dangling.json:5:"), "{}", out.stderr);

    let out = run(&["graph", "validate", "sym3.json"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("expected kind"));
    assert_eq!(run(&["graph", "frobnicate"]).code, 1);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn group_commands() {
    let r = result(&["group", "orbits", "sym3.json"]);
    assert_eq!(r["group"]["order"], 6);
    assert_eq!(result(&["group", "stab", "sym3.json", "--point", "0"])["stabilizer"]["order"], 2);
    let r = result(&["group", "blocks", "rotation4.json"]);
    assert_eq!(r["minimal_block_systems"], serde_json::json!([[[0, 2], [1, 3]]]));
    assert_eq!(result(&["group", "blocks", "sym3.json"])["primitive"], true);
    assert_eq!(result(&["group", "kernel", "sym3_edge_action.json"])["kernel"]["order"], 6);
}

#[test]
fn aut_and_imprim_commands() {
    assert_eq!(result(&["aut", "group", "cycle4.json"])["group"]["order"], 8);
    assert_eq!(result(&["aut", "orbit-bound", "c4_action.json"])["bound"], 2);
    let r = result(&["imprim", "from-normal", "c4_action.json", "c4_half_turn.json"]);
    assert_eq!(r["blocks"], serde_json::json!([["a", "c"], ["b", "d"]]));
    let r = result(&["imprim", "quotient-action", "c4_action.json", "c4_half_turn.json"]);
    assert_eq!(r["kernel"]["order"], 4);
    assert_eq!(r["kernel_contains_subgroup"], true);
}

#[test]
fn gos_commands() {
    assert_eq!(result(&["gos", "total", "gos_loop.json"])["counts"]["vertices"], 4);
    let r = result(&["gos", "check-cover", "double_to_loop.json"]);
    assert_eq!((r["is_covering"].clone(), r["degree"].clone()), (Value::Bool(true), Value::from(2)));
    let r = result(&["gos", "deck", "double_to_loop.json"]);
    assert_eq!((r["order"].clone(), r["regular"].clone()), (Value::from(2), Value::Bool(true)));
    assert_eq!(result(&["gos", "quotient", "double_swap.json"])["base"]["vertices"], 1);
    let r = result(&["gos", "fiber-product", "c6_to_c3.json", "c6_to_c3.json"]);
    assert_eq!(r["num_components"], 2);
    for c in r["components"].as_array().unwrap() {
        assert_eq!(c["counts"]["vertices"], 6);
        assert_eq!(c["first_is_covering"], true);
    }
}

#[test]
fn leighton_commands() {
    assert_eq!(result(&["leighton", "refine", "star3.json"])["classes"], 2);
    assert_eq!(result(&["leighton", "oracle", "cycle4.json", "cycle6.json"])["order"], 12);
    let out = run(&["leighton", "oracle", "cycle4.json", "cycle6.json", "--max-degree", "2"]);
    assert_eq!(out.code, 2);
    let r = result(&["leighton", "gos-cover", "gos_double.json", "gos_loop.json"]);
    assert_eq!((r["first_is_covering"].clone(), r["second_is_covering"].clone()), (Value::Bool(true), Value::Bool(true)));
}

#[test]
fn hat_commands() {
    let r = result(&["leighton", "hat", "verify", "hat_hexagons.json"]);
    assert_eq!(r["passed"], true);
    assert_eq!(r["vertices"][0]["space"]["vertices"], 2);
    assert_eq!(r["vertices"][0]["regular"], true);
    let r = result(&["leighton", "hat", "ball", "hat_hexagons.json", "--radius", "1"]);
    assert_eq!(r["base"]["vertices"], 3);
    assert_eq!(r["passed"], true);
    let out = run(&["leighton", "hat", "verify", "hat_not_free.json"]);
    assert_eq!(out.code, 2);
    assert!(out.report["message"].as_str().unwrap().starts_with("NotFree"));
}

#[test]
fn seeded_lifts() {
    let a = result(&["graph", "lift", "cycle3.json", "--degree", "3", "--seed", "5"]);
    let b = result(&["graph", "lift", "cycle3.json", "--degree", "3", "--seed", "5"]);
    assert_eq!(a, b);
    assert_eq!(a["degree"], 3);
}
