//! Cross-module scenarios for the worked examples used throughout the
//! crate: the conference-planning database, the four-atom query with one
//! strong attack, the six-atom all-weak-terminal query, and the cycle
//! queries.

use std::collections::BTreeSet;

use cqa::attack::{attack_graph, attack_graph_of_tree, Strength};
use cqa::classify::{classify_complexity, ComplexityVerdict};
use cqa::db::parse_database;
use cqa::eval::satisfies;
use cqa::jointree::{join_tree_with, path_labels, TieBreak};
use cqa::prob::BidDatabase;
use cqa::purify::purify;
use cqa::query::{parse_query, Query, Rel, Var};
use cqa::solver::{
    certain_bruteforce, count_satisfying_repairs, solve, Limits, Method, MethodChoice,
};

const FIG1: &str = "\
@relation C 3 2
@relation R 2 1
C PODS 2016 Rome
C PODS 2016 Paris
C KDD 2017 Rome
R PODS A
R KDD A
R KDD B
";

fn q1() -> Query {
    parse_query("R(u,'a';x) & S(y;x,z) & T(x;y) & P(x;z)").unwrap()
}

fn vars(names: &[&str]) -> BTreeSet<Var> {
    names.iter().map(|n| Var::new(*n)).collect()
}

#[test]
fn conference_database_end_to_end() {
    let db = parse_database(FIG1).unwrap();
    let q = parse_query("C(x,y;'Rome') & R(x;'A')").unwrap();
    let limits = Limits::default();

    assert_eq!(db.repair_count(), 4);
    assert_eq!(count_satisfying_repairs(&db, &q, &limits).unwrap(), (3, 4));

    let auto = solve(&db, &q, MethodChoice::Auto, &limits).unwrap();
    assert_eq!(auto.method, Method::TerminalWeak);
    assert!(!auto.certain);

    let brute = certain_bruteforce(&db, &q, &limits).unwrap();
    assert!(!brute.certain);
    let witness = brute.witness.unwrap();
    assert!(witness.is_repair_of(&db));
    assert!(!satisfies(&witness.facts, &q));

    // uniform repair probabilities give 3/4
    let pdb = BidDatabase::uniform(db.clone());
    let p = cqa::prob::prob_bruteforce(&pdb, &q, &limits).unwrap();
    assert_eq!(
        p,
        num_rational::BigRational::new(3.into(), 4.into())
    );
    assert!(!cqa::prob::prob_is_one(&pdb, &q, &limits).unwrap());

    // the conference query purifies this database away entirely
    assert!(purify(&db, &q).is_empty());
}

#[test]
fn q1_ground_truth() {
    let q = q1();
    let graph = attack_graph(&q).unwrap();
    let idx = |name: &str| q.index_of(q.atom_of(&Rel::new(name)).unwrap()).unwrap();
    let (f, g, h, i) = (idx("R"), idx("S"), idx("T"), idx("P"));

    let edges: BTreeSet<(usize, usize)> =
        graph.edges().map(|e| (e.from, e.to)).collect();
    let expected: BTreeSet<(usize, usize)> =
        [(f, g), (f, h), (f, i), (g, f), (g, h), (g, i), (h, g)]
            .into_iter()
            .collect();
    assert_eq!(edges, expected);
    assert_eq!(graph.strength(g, f), Some(Strength::Strong));
    assert_eq!(
        graph.edges().filter(|e| e.strength == Strength::Strong).count(),
        1
    );

    match classify_complexity(&q) {
        ComplexityVerdict::ConpComplete { strong_pair } => {
            assert_eq!(strong_pair.0.rel, Rel::new("S"));
            assert_eq!(strong_pair.1.rel, Rel::new("R"));
        }
        other => panic!("expected coNP-complete, got {other:?}"),
    }
}

#[test]
fn q1_join_tree_paths_and_invariance() {
    let q = q1();
    let atom = |name: &str| q.atom_of(&Rel::new(name)).unwrap().clone();

    let asc = join_tree_with(&q, TieBreak::LexAsc).unwrap();
    assert_eq!(
        path_labels(&asc, &atom("R"), &atom("T")).unwrap(),
        vec![vars(&["x"]), vars(&["x", "y"])]
    );

    let desc = join_tree_with(&q, TieBreak::LexDesc).unwrap();
    assert_ne!(asc.edges(), desc.edges(), "two distinct join trees");
    assert!(asc.verify() && desc.verify());
    let from_asc = attack_graph_of_tree(&q, &asc).unwrap();
    let from_desc = attack_graph_of_tree(&q, &desc).unwrap();
    assert_eq!(
        from_asc.edges().collect::<Vec<_>>(),
        from_desc.edges().collect::<Vec<_>>()
    );
}

#[test]
fn the_three_hand_built_k2_instances() {
    let limits = Limits::default();
    let schema = "@relation R1 2 1\n@relation R2 2 1\n@relation S2 2 2\n";

    let a = parse_database(&format!("{schema}R1 a b\nR2 b a\nS2 a b\n")).unwrap();
    assert!(cqa::solver::certain_cycle_query(&a, 2, &limits).unwrap().certain);

    let b = parse_database(&format!(
        "{schema}R1 a b\nR1 a bp\nR1 ap b\nR1 ap bp\n\
         R2 b a\nR2 b ap\nR2 bp a\nR2 bp ap\n\
         S2 a b\nS2 a bp\nS2 ap b\nS2 ap bp\n"
    ))
    .unwrap();
    let ans = cqa::solver::certain_cycle_query(&b, 2, &limits).unwrap();
    assert!(!ans.certain);
    let q_ac2 = parse_query("R1(x1;x2) & R2(x2;x1) & S2(x1,x2)").unwrap();
    let w = ans.witness.unwrap();
    assert!(w.is_repair_of(&b));
    assert!(!satisfies(&w.facts, &q_ac2));

    let c = parse_database(&format!(
        "{schema}R1 a b\nR1 a c\nR2 b a\nR2 c a\nS2 a b\nS2 a c\n"
    ))
    .unwrap();
    assert!(cqa::solver::certain_cycle_query(&c, 2, &limits).unwrap().certain);
}

#[test]
fn fig3_query_is_terminal_weak_and_solvable() {
    let q = parse_query(
        "R1(x,u1;u2,z) & R2(x,u2;u1,z) & R3(x,y,u3;u4) & R4(x,y,u4;u3) \
         & R5(y,u5;u6) & R6(y,u6;u5)",
    )
    .unwrap();
    assert!(matches!(
        classify_complexity(&q),
        ComplexityVerdict::PtimeTerminalWeak { .. }
    ));
    let db = parse_database(
        "@relation R1 4 2\n@relation R2 4 2\n@relation R3 4 3\n@relation R4 4 3\n\
         @relation R5 3 2\n@relation R6 3 2\n\
         R1 a p1 p2 t\nR2 a p2 p1 t\nR3 a b r1 r2\nR4 a b r2 r1\n\
         R5 b s1 s2\nR6 b s2 s1\n",
    )
    .unwrap();
    let limits = Limits::default();
    let auto = solve(&db, &q, MethodChoice::Auto, &limits).unwrap();
    assert_eq!(auto.method, Method::TerminalWeak);
    assert_eq!(
        auto.certain,
        certain_bruteforce(&db, &q, &limits).unwrap().certain
    );
}

#[test]
fn purification_worked_example() {
    let db = parse_database("@relation R 2 1\n@relation S 2 1\nR a b\nS b a\nS b c\n").unwrap();
    let q = parse_query("R(x;y) & S(y;x)").unwrap();
    assert!(purify(&db, &q).is_empty());
}

#[test]
fn cycle_query_family_classification() {
    for (text, k, is_ack) in [
        ("R1(x1;x2) & R2(x2;x1) & S2(x1,x2)", 2, true),
        ("R1(x1;x2) & R2(x2;x3) & R3(x3;x1) & S3(x1,x2,x3)", 3, true),
        ("R1(x1;x2) & R2(x2;x3) & R3(x3;x1)", 3, false),
        (
            "R1(x1;x2) & R2(x2;x3) & R3(x3;x4) & R4(x4;x1) & S4(x1,x2,x3,x4)",
            4,
            true,
        ),
    ] {
        let q = parse_query(text).unwrap();
        match classify_complexity(&q) {
            ComplexityVerdict::PtimeCycleQuery { pattern } => {
                assert_eq!(pattern.k, k, "{text}");
                assert_eq!(pattern.all_key_rel.is_some(), is_ack, "{text}");
            }
            other => panic!("{text}: unexpected verdict {other:?}"),
        }
    }
}
