//! End-to-end tests of the binary: output text, exit codes, JSON shape.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.push("tests/data");
    path.push(name);
    path.display().to_string()
}

fn cqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn classify_outputs() {
    let out = cqa(&["classify", "-f", &data("q1.cq")]);
    assert_eq!(stdout(&out), "coNP-complete (strong 2-cycle: S\u{2194}R)\n");
    assert_eq!(code(&out), 0);

    let out = cqa(&["classify", "-f", &data("ac3.cq")]);
    assert_eq!(stdout(&out), "PTIME (cycle query, k=3)\n");

    let out = cqa(&["classify", "-q", ""]);
    assert_eq!(stdout(&out), "FO-rewritable (empty attack graph)\n");

    let out = cqa(&["classify", "-f", &data("fig3.cq")]);
    assert!(stdout(&out).starts_with("PTIME (weak terminal cycles:"));
}

#[test]
fn solve_fig1_not_certain_with_witness() {
    let out = cqa(&["solve", "-f", &data("fig1.cq"), "-d", &data("fig1.db")]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.starts_with("NOT CERTAIN\nmethod: terminal_weak\nfalsifying repair:\n"));
    for fact in ["C PODS 2016 Paris", "C KDD 2017 Rome", "R KDD B", "R PODS A"] {
        assert!(text.contains(fact), "missing {fact} in {text}");
    }
}

#[test]
fn solve_empty_query_is_certain() {
    let out = cqa(&["solve", "-q", "", "-d", &data("fig1.db")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("CERTAIN\n"));
}

#[test]
fn solve_json_round_trips_the_verdict() {
    let human = cqa(&["solve", "-f", &data("fig1.cq"), "-d", &data("fig1.db")]);
    let json_out = cqa(&["solve", "-f", &data("fig1.cq"), "-d", &data("fig1.db"), "--json"]);
    assert_eq!(code(&json_out), 1);
    let value: serde_json::Value = serde_json::from_str(stdout(&json_out).trim()).unwrap();
    assert_eq!(value["command"], "solve");
    assert_eq!(value["certain"], false);
    assert_eq!(value["method"], "terminal_weak");
    let human_text = stdout(&human);
    assert_eq!(
        human_text.contains("NOT CERTAIN"),
        !value["certain"].as_bool().unwrap()
    );
    assert!(human_text.contains(value["method"].as_str().unwrap()));
    let witness: Vec<&str> = value["witness"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for fact in &witness {
        assert!(human_text.contains(fact));
    }
    assert_eq!(witness.len(), 4);
}

#[test]
fn method_override_checks_preconditions() {
    let out = cqa(&[
        "solve",
        "-f",
        &data("q1.cq"),
        "-d",
        &data("fig1.db"),
        "--method",
        "terminal-weak",
    ]);
    assert_eq!(code(&out), 66);
}

#[test]
fn count_prints_three_quarters() {
    let out = cqa(&["count", "-f", &data("fig1.cq"), "-d", &data("fig1.db")]);
    assert_eq!(stdout(&out), "3/4\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn repair_limit_env_var_guards_count() {
    let out = Command::new(env!("CARGO_BIN_EXE_cqa"))
        .args(["count", "-f", &data("fig1.cq"), "-d", &data("fig1.db")])
        .env("CQA_REPAIR_LIMIT", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 66);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds the limit"));
}

#[test]
fn issafe_q0_unsafe_with_empty_trace() {
    let out = cqa(&["issafe", "-q", "R0(x;y) & S0(y,z;x)"]);
    let text = stdout(&out);
    assert!(text.starts_with("UNSAFE\n"));
    assert!(!text.contains("SE"), "no rules fired: {text}");

    let out = cqa(&["issafe", "-q", "R(x;y)"]);
    let text = stdout(&out);
    assert!(text.starts_with("SAFE\n"));
    assert!(text.contains("SE3") && text.contains("SE4") && text.contains("SE1"));
}

#[test]
fn prob_exact_and_is_one() {
    let out = cqa(&[
        "prob",
        "-f",
        &data("fig1.cq"),
        "-p",
        &data("fig1-uniform.bid"),
        "--exact",
    ]);
    assert_eq!(stdout(&out), "3/4\n");

    let out = cqa(&[
        "prob",
        "-f",
        &data("fig1.cq"),
        "-p",
        &data("fig1-uniform.bid"),
        "--is-one",
    ]);
    assert_eq!(stdout(&out), "Pr(q) < 1\n");

    let both = cqa(&[
        "prob",
        "-f",
        &data("fig1.cq"),
        "-p",
        &data("fig1-uniform.bid"),
        "--exact",
        "--is-one",
    ]);
    assert_eq!(code(&both), 64);
}

#[test]
fn attack_graph_dot_has_seven_edges_one_strong() {
    let out = cqa(&["attack-graph", "-f", &data("q1.cq"), "--dot"]);
    let dot = stdout(&out);
    assert_eq!(dot.matches(" -> ").count(), 7);
    assert_eq!(dot.matches("color=red").count(), 1);
}

#[test]
fn join_tree_reports_cyclic_queries() {
    let out = cqa(&["join-tree", "-q", "R1(x1;x2) & R2(x2;x3) & R3(x3;x1)"]);
    assert_eq!(stdout(&out), "CYCLIC\n");
    assert_eq!(code(&out), 0);

    let out = cqa(&["join-tree", "-f", &data("q1.cq"), "--dot"]);
    assert!(stdout(&out).starts_with("graph join_tree {"));
}

#[test]
fn purify_emits_canonical_database() {
    let dir = tempfile::tempdir().unwrap();
    let db_path = dir.path().join("in.db");
    std::fs::write(
        &db_path,
        "@relation R 2 1\n@relation S 2 1\nR a b\nS b a\nS b c\n",
    )
    .unwrap();
    let out = cqa(&[
        "purify",
        "-q",
        "R(x;y) & S(y;x)",
        "-d",
        db_path.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&out), "@relation R 2 1\n@relation S 2 1\n");
}

#[test]
fn reduce_strong_cycle_single_embedding() {
    let out = cqa(&[
        "reduce",
        "strong-cycle",
        "-f",
        &data("q1.cq"),
        "-d",
        &data("gadget.db"),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let fact_lines = text
        .lines()
        .filter(|l| !l.starts_with('@') && !l.is_empty())
        .count();
    assert_eq!(fact_lines, 4, "{text}");

    // queries without a strong cycle are rejected
    let out = cqa(&[
        "reduce",
        "strong-cycle",
        "-q",
        "R(x;y) & S(y;x)",
        "-d",
        &data("gadget.db"),
    ]);
    assert_eq!(code(&out), 66);
}

#[test]
fn reduce_ck_ack_adds_all_key_tuples() {
    let out = cqa(&["reduce", "ck-ack", "-k", "3", "-d", &data("c3.db")]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("@relation S3 3 3"));
    assert_eq!(text.matches("\nS3 ").count(), 27, "3^3 all-key facts");
}

#[test]
fn exit_codes_for_bad_input() {
    let out = cqa(&["classify"]);
    assert_eq!(code(&out), 64);

    let out = cqa(&["classify", "-q", "R('c';)"]);
    assert_eq!(code(&out), 65);

    let out = cqa(&["solve", "-q", "R(x;y)", "-d", "/nonexistent/file.db"]);
    assert_eq!(code(&out), 66);

    let out = cqa(&["classify", "-q", "R(x;y)", "-f", &data("q1.cq")]);
    assert_eq!(code(&out), 64, "query and query-file are exclusive");
}
