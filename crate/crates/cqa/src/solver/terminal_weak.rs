//! Polynomial decision for queries whose attack cycles are all weak and
//! terminal.
//!
//! The recursion purifies, then branches on an unattacked atom F: the
//! answer is true iff for some key vector ā drawn from the F-facts, the
//! database purified for q[x̄→ā] is nonempty and every matching F-fact
//! leads to a recursive yes on the query without F. When every atom is
//! attacked, the attack graph is a disjoint union of weak terminal
//! 2-cycles; facts are grouped into partitions along the variables shared
//! with other cycles, partitions that are certain for their pair are kept,
//! and the union of kept partitions must satisfy the query outright.

use std::collections::{BTreeMap, BTreeSet};

use crate::attack::{attack_graph, AttackGraph};
use crate::db::{Fact, UncertainDatabase};
use crate::error::{Error, Result};
use crate::eval::{satisfies, unify, Valuation};
use crate::purify::purify;
use crate::query::{Atom, Constant, Query, Var};
use crate::solver::{certain_bruteforce, CertainAnswer, Limits, Method};

/// Decides CERTAINTY(q) for a query whose attack cycles are all weak and
/// terminal. The answer matches brute force; no witness is produced.
pub fn certain_terminal_weak(
    db: &UncertainDatabase,
    q: &Query,
    limits: &Limits,
) -> Result<CertainAnswer> {
    let graph = attack_graph(q)?;
    if !graph.all_cycles_weak_and_terminal() {
        return Err(Error::PreconditionViolated(format!(
            "attack graph of {q} has a strong or nonterminal cycle"
        )));
    }
    Ok(CertainAnswer {
        certain: recurse(db, q, limits)?,
        method: Method::TerminalWeak,
        witness: None,
    })
}

fn recurse(db: &UncertainDatabase, q: &Query, limits: &Limits) -> Result<bool> {
    if q.is_empty() {
        return Ok(true);
    }
    let db = purify(db, q);
    if db.is_empty() {
        return Ok(false);
    }
    let graph = attack_graph(q)?;
    match graph.unattacked_atoms().first() {
        Some(&f_idx) => branch_on_unattacked(&db, q, f_idx, limits),
        None => base_case(&db, q, &graph, limits),
    }
}

/// Distinct variables of the given terms, in first-occurrence order.
fn distinct_vars(terms: &[crate::query::Term]) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in terms {
        if let Some(v) = t.as_var() {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
    }
    out
}

fn branch_on_unattacked(
    db: &UncertainDatabase,
    q: &Query,
    f_idx: usize,
    limits: &Limits,
) -> Result<bool> {
    let f = q.atoms()[f_idx].clone();
    let key_vars = distinct_vars(&f.key);

    // Candidate key vectors: the keys of F-facts, unified against F's key
    // pattern. Other vectors purify the database to empty, except that one
    // fresh vector is tried when the key variables occur only in F.
    let key_pattern = Atom::new(f.rel.clone(), f.key.clone(), Vec::new());
    let mut candidates: BTreeSet<Vec<Constant>> = BTreeSet::new();
    for fact in db.facts_of(&f.rel) {
        let key_fact = Fact::new(fact.rel.clone(), fact.key.clone(), Vec::new());
        if let Some(val) = unify(&key_pattern, &key_fact, &Valuation::new()) {
            candidates.insert(key_vars.iter().map(|v| val[v].clone()).collect());
        }
    }
    if !key_vars.is_empty() {
        let elsewhere = q
            .atoms()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != f_idx)
            .any(|(_, a)| key_vars.iter().any(|v| a.vars().contains(v)));
        if !elsewhere {
            candidates.insert(fresh_vector(db, q, key_vars.len()));
        }
    }

    for a_vec in candidates {
        let q_a = q.substitute_all(&key_vars, &a_vec);
        let db_a = purify(db, &q_a);
        if db_a.is_empty() {
            continue;
        }
        let f_a = q_a
            .atom_of(&f.rel)
            .expect("self-join-free query keeps one atom per relation")
            .clone();
        let q_rest = q_a.without(q_a.index_of(&f_a).expect("atom present"));
        let y_vars = {
            let mut vars = distinct_vars(&f_a.key);
            vars.extend(distinct_vars(&f_a.nonkey));
            let mut seen = BTreeSet::new();
            vars.retain(|v| seen.insert(v.clone()));
            vars
        };
        let mut all_ok = true;
        for fact in db_a.facts_of(&f_a.rel) {
            let Some(val) = unify(&f_a, fact, &Valuation::new()) else {
                continue; // not an instance of F[x̄→ā]
            };
            let b_vec: Vec<Constant> = y_vars.iter().map(|v| val[v].clone()).collect();
            let q_next = q_rest.substitute_all(&y_vars, &b_vec);
            if !recurse(&db_a, &q_next, limits)? {
                all_ok = false;
                break;
            }
        }
        if all_ok {
            return Ok(true);
        }
    }
    Ok(false)
}

fn fresh_vector(db: &UncertainDatabase, q: &Query, len: usize) -> Vec<Constant> {
    let mut used: BTreeSet<Constant> = db.active_domain();
    used.extend(q.constants());
    let mut out = Vec::with_capacity(len);
    let mut i = 0usize;
    while out.len() < len {
        let c = Constant::new(format!("fresh{i}"));
        if !used.contains(&c) {
            out.push(c);
        }
        i += 1;
    }
    out
}

fn base_case(
    db: &UncertainDatabase,
    q: &Query,
    graph: &AttackGraph,
    limits: &Limits,
) -> Result<bool> {
    let pairs = graph.terminal_two_cycles().ok_or_else(|| {
        Error::PreconditionViolated("attack graph lost the terminal 2-cycle shape".into())
    })?;
    let covered: BTreeSet<usize> = pairs.iter().flat_map(|&(f, g)| [f, g]).collect();
    if covered.len() != q.atoms().len() {
        return Err(Error::PreconditionViolated(
            "every atom must lie on a cycle when no atom is unattacked".into(),
        ));
    }

    let pair_vars: Vec<BTreeSet<Var>> = pairs
        .iter()
        .map(|&(f, g)| {
            let mut vars = q.atoms()[f].vars();
            vars.extend(q.atoms()[g].vars());
            vars
        })
        .collect();

    let mut kept: BTreeSet<Fact> = BTreeSet::new();
    for (i, &(f_idx, g_idx)) in pairs.iter().enumerate() {
        let f = &q.atoms()[f_idx];
        let g = &q.atoms()[g_idx];
        let pair_q = Query::new(vec![f.clone(), g.clone()])?;

        // variables this pair shares with any other pair; they sit in the
        // keys of both atoms, so facts group by their values
        let shared: Vec<Var> = pair_vars[i]
            .iter()
            .filter(|v| {
                pair_vars
                    .iter()
                    .enumerate()
                    .any(|(j, vars)| j != i && vars.contains(*v))
            })
            .cloned()
            .collect();

        let mut partitions: BTreeMap<Vec<Constant>, Vec<Fact>> = BTreeMap::new();
        for fact in db.facts() {
            let atom = if fact.rel == f.rel {
                f
            } else if fact.rel == g.rel {
                g
            } else {
                continue;
            };
            let val = unify(atom, fact, &Valuation::new()).ok_or_else(|| {
                Error::PreconditionViolated(format!(
                    "fact {fact} does not match its atom in a purified database"
                ))
            })?;
            let vector: Vec<Constant> = shared
                .iter()
                .map(|v| {
                    val.get(v).cloned().ok_or_else(|| {
                        Error::PreconditionViolated(format!(
                            "shared variable {v} is not bound by {atom}"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            partitions.entry(vector).or_default().push(fact.clone());
        }

        for facts in partitions.into_values() {
            let part_db = db.restrict_to(facts.clone());
            if certain_bruteforce(&part_db, &pair_q, limits)?.certain {
                kept.extend(facts);
            }
        }
    }
    Ok(satisfies(&kept, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::parse_database;
    use crate::query::parse_query;
    use crate::solver::certain_bruteforce;
    use crate::testutil::{fig1_db, fig1_query, fig3_query, q1};

    fn tw(db: &UncertainDatabase, q: &Query) -> bool {
        certain_terminal_weak(db, q, &Limits::default())
            .unwrap()
            .certain
    }

    #[test]
    fn pair_query_with_two_good_repairs_is_certain() {
        let db = parse_database(
            "@relation R1 2 1\n@relation R2 2 1\nR1 a b\nR1 a c\nR2 b a\nR2 c a\n",
        )
        .unwrap();
        let q = parse_query("R1(x;y) & R2(y;x)").unwrap();
        assert!(tw(&db, &q));
    }

    #[test]
    fn pair_query_that_purifies_to_empty_is_not_certain() {
        let db = parse_database("@relation R1 2 1\n@relation R2 2 1\nR1 a b\nR2 b c\n").unwrap();
        let q = parse_query("R1(x;y) & R2(y;x)").unwrap();
        assert!(!tw(&db, &q));
    }

    #[test]
    fn fig1_is_not_certain() {
        assert!(!tw(&fig1_db(), &fig1_query()));
    }

    #[test]
    fn empty_query_is_certain_and_empty_db_is_not() {
        let db = parse_database("@relation R 2 1\n").unwrap();
        assert!(tw(&db, &Query::empty()));
        assert!(!tw(&db, &parse_query("R(x;y)").unwrap()));
    }

    #[test]
    fn rejects_strong_cycles() {
        let db = parse_database("@relation R 3 2\n").unwrap();
        assert!(matches!(
            certain_terminal_weak(&db, &q1(), &Limits::default()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn agrees_with_bruteforce_on_a_fig3_instance() {
        let q = fig3_query();
        let db = parse_database(
            "@relation R1 4 2\n@relation R2 4 2\n@relation R3 4 3\n@relation R4 4 3\n\
             @relation R5 3 2\n@relation R6 3 2\n\
             R1 d1 d2 d3 d4\nR2 d1 d3 d2 d4\nR3 d1 d5 d6 d7\nR4 d1 d5 d7 d6\n\
             R5 d5 d8 d9\nR6 d5 d9 d8\n",
        )
        .unwrap();
        let expected = certain_bruteforce(&db, &q, &Limits::default())
            .unwrap()
            .certain;
        assert_eq!(tw(&db, &q), expected);
    }
}
