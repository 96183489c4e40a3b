//! Complexity classification of CERTAINTY(q) for self-join-free Boolean
//! conjunctive queries.
//!
//! Decision order: self-joins are unsupported; a hypergraph-cyclic query is
//! polynomial when it is a key cycle C_k (k ≥ 3) and unsupported otherwise;
//! for acyclic queries the attack graph decides: acyclic graph means
//! first-order rewritable, a strong cycle means coNP-complete, all cycles
//! weak and terminal means polynomial, the cycle queries AC_k are
//! polynomial, and the remaining nonterminal-weak case is open.

use std::collections::BTreeMap;

use crate::attack::{attack_graph, AttackGraph};
use crate::jointree::join_tree;
use crate::query::{self_join_relation, Atom, Query, Rel, Term, Var};

/// Recognized cycle-query pattern, up to renaming of relations and
/// variables: `k` binary key-cycle atoms, optionally closed by one all-key
/// atom over the cycle variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclePattern {
    pub k: usize,
    /// Relations in cycle order: `rels[i]` maps position i to position i+1
    /// (mod k).
    pub rels: Vec<Rel>,
    /// The all-key relation, present for AC_k and absent for C_k.
    pub all_key_rel: Option<Rel>,
    /// The cycle variables, in cycle order aligned with `rels`.
    pub vars: Vec<Var>,
}

/// The complexity class of CERTAINTY(q), with the rule that fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComplexityVerdict {
    /// Acyclic attack graph: first-order rewritable.
    FoRewritable { empty_query: bool },
    /// Strong cycle in the attack graph, witnessed by a 2-cycle whose first
    /// component attacks the second strongly.
    ConpComplete { strong_pair: (Atom, Atom) },
    /// Every attack cycle is weak and terminal; the terminal 2-cycles are
    /// the evidence.
    PtimeTerminalWeak { cycles: Vec<(Atom, Atom)> },
    /// The query is C_k (k ≥ 3, hypergraph-cyclic) or AC_k up to renaming.
    PtimeCycleQuery { pattern: CyclePattern },
    /// Nonterminal weak cycles outside the AC_k family: open.
    OpenNonterminalWeak,
    UnsupportedSelfJoin { relation: Rel },
    UnsupportedCyclicQuery,
}

impl ComplexityVerdict {
    pub fn label(&self) -> String {
        match self {
            ComplexityVerdict::FoRewritable { empty_query: true } => {
                "FO-rewritable (empty attack graph)".into()
            }
            ComplexityVerdict::FoRewritable { empty_query: false } => {
                "FO-rewritable (acyclic attack graph)".into()
            }
            ComplexityVerdict::ConpComplete { strong_pair: (f, g) } => {
                format!("coNP-complete (strong 2-cycle: {}\u{2194}{})", f.rel, g.rel)
            }
            ComplexityVerdict::PtimeTerminalWeak { cycles } => {
                let pairs = cycles
                    .iter()
                    .map(|(f, g)| format!("{}\u{2194}{}", f.rel, g.rel))
                    .collect::<Vec<_>>()
                    .join(", ");
                format!("PTIME (weak terminal cycles: {pairs})")
            }
            ComplexityVerdict::PtimeCycleQuery { pattern } => {
                format!("PTIME (cycle query, k={})", pattern.k)
            }
            ComplexityVerdict::OpenNonterminalWeak => {
                "open (nonterminal weak cycles, no strong cycle)".into()
            }
            ComplexityVerdict::UnsupportedSelfJoin { relation } => {
                format!("unsupported (self-join on {relation})")
            }
            ComplexityVerdict::UnsupportedCyclicQuery => {
                "unsupported (cyclic query, not a key cycle)".into()
            }
        }
    }

    pub fn class_name(&self) -> &'static str {
        match self {
            ComplexityVerdict::FoRewritable { .. } => "FO_REWRITABLE",
            ComplexityVerdict::ConpComplete { .. } => "CONP_COMPLETE",
            ComplexityVerdict::PtimeTerminalWeak { .. } => "PTIME_TERMINAL_WEAK",
            ComplexityVerdict::PtimeCycleQuery { .. } => "PTIME_CYCLE_QUERY",
            ComplexityVerdict::OpenNonterminalWeak => "OPEN_NONTERMINAL_WEAK",
            ComplexityVerdict::UnsupportedSelfJoin { .. } => "UNSUPPORTED_SELF_JOIN",
            ComplexityVerdict::UnsupportedCyclicQuery => "UNSUPPORTED_CYCLIC_QUERY",
        }
    }
}

/// Recognizes C_k / AC_k up to renaming. Returns `None` when the query is
/// not of that shape.
pub fn recognize_cycle_query(q: &Query) -> Option<CyclePattern> {
    if self_join_relation(q).is_some() {
        return None;
    }
    let mut binary: Vec<&Atom> = Vec::new();
    let mut all_key: Vec<&Atom> = Vec::new();
    for a in q.atoms() {
        let sig = a.signature();
        if sig.arity == 2 && sig.key_len == 1 {
            binary.push(a);
        } else if sig.is_all_key() {
            all_key.push(a);
        } else {
            return None;
        }
    }
    let k = binary.len();
    if k < 2 || all_key.len() > 1 {
        return None;
    }
    let all_key: Option<&Atom> = all_key.first().copied();
    // each binary atom is key-variable -> nonkey-variable
    let mut succ: BTreeMap<Var, (Var, Rel)> = BTreeMap::new();
    for a in &binary {
        let key = a.key[0].as_var()?.clone();
        let next = a.nonkey[0].as_var()?.clone();
        if key == next || succ.contains_key(&key) {
            return None;
        }
        succ.insert(key, (next, a.rel.clone()));
    }
    if succ.len() != k {
        return None;
    }
    // the successor map must be one cycle through all k variables
    let start = match all_key {
        None => succ.keys().next()?.clone(),
        Some(s) => s.key.first()?.as_var()?.clone(),
    };
    let mut vars = Vec::with_capacity(k);
    let mut rels = Vec::with_capacity(k);
    let mut cur = start.clone();
    for _ in 0..k {
        let (next, rel) = succ.get(&cur)?.clone();
        vars.push(cur.clone());
        rels.push(rel);
        cur = next;
    }
    if cur != start || vars.len() != k {
        return None;
    }
    let all_key_rel = match all_key {
        None => None,
        Some(s) => {
            // the all-key atom must list the cycle variables in cycle order,
            // starting at its own first term
            if s.key.len() != k {
                return None;
            }
            for (i, term) in s.key.iter().enumerate() {
                if term.as_var()? != &vars[i] {
                    return None;
                }
            }
            Some(s.rel.clone())
        }
    };
    // no stray variables or constants
    let cycle_vars: std::collections::BTreeSet<&Var> = vars.iter().collect();
    for a in q.atoms() {
        for t in a.terms() {
            match t {
                Term::Variable(v) if cycle_vars.contains(v) => {}
                _ => return None,
            }
        }
    }
    Some(CyclePattern {
        k,
        rels,
        all_key_rel,
        vars,
    })
}

/// Classifies the complexity of CERTAINTY(q).
pub fn classify_complexity(q: &Query) -> ComplexityVerdict {
    if let Some(relation) = self_join_relation(q) {
        return ComplexityVerdict::UnsupportedSelfJoin { relation };
    }
    if join_tree(q).is_err() {
        return match recognize_cycle_query(q) {
            Some(pattern) if pattern.all_key_rel.is_none() && pattern.k >= 3 => {
                ComplexityVerdict::PtimeCycleQuery { pattern }
            }
            _ => ComplexityVerdict::UnsupportedCyclicQuery,
        };
    }
    let graph = attack_graph(q).expect("acyclic and self-join-free");
    classify_from_graph(q, &graph)
}

fn classify_from_graph(q: &Query, graph: &AttackGraph) -> ComplexityVerdict {
    if graph.is_acyclic() {
        return ComplexityVerdict::FoRewritable {
            empty_query: q.is_empty(),
        };
    }
    if let Some((f, g)) = graph.find_strong_two_cycle() {
        return ComplexityVerdict::ConpComplete {
            strong_pair: (q.atoms()[f].clone(), q.atoms()[g].clone()),
        };
    }
    if let Some(pairs) = graph.terminal_two_cycles() {
        // no strong cycle here, so the pairs are weak
        return ComplexityVerdict::PtimeTerminalWeak {
            cycles: pairs
                .into_iter()
                .map(|(f, g)| (q.atoms()[f].clone(), q.atoms()[g].clone()))
                .collect(),
        };
    }
    if let Some(pattern) = recognize_cycle_query(q) {
        if pattern.all_key_rel.is_some() {
            return ComplexityVerdict::PtimeCycleQuery { pattern };
        }
    }
    ComplexityVerdict::OpenNonterminalWeak
}
