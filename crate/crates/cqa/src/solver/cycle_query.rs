//! Polynomial decision for the cycle queries AC_k and C_k.
//!
//! After purification, the R_i facts of an AC_k database form a k-partite
//! directed graph whose vertices are constants tagged with their position
//! class; the S_k facts single out a set C of forbidden k-cycles. The query
//! is falsifiable iff one outgoing edge can be marked for every vertex
//! without marking all edges of some cycle in C. Per strong component, a
//! k-cycle outside C or an elementary cycle longer than k gets marked; if
//! some component has neither, the query is certain. Otherwise the marking
//! is completed along shortest paths to marked vertices and the marked
//! edges, together with all S_k facts, spell out a falsifying repair.
//!
//! A C_k database is handled by adding an all-key fact for every k-tuple
//! over the active domain and solving the AC_k instance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::classify::CyclePattern;
use crate::db::{Fact, Repair, UncertainDatabase};
use crate::error::{Error, Result};
use crate::purify::purify_traced;
use crate::query::{Atom, Constant, Query, Rel, Signature, Term, Var};
use crate::scc::strongly_connected_components;
use crate::solver::{CertainAnswer, Limits, Method};

/// The canonical AC_k pattern: relations `R1..Rk` and `Sk` over variables
/// `x1..xk`.
pub fn canonical_ack_pattern(k: usize) -> CyclePattern {
    CyclePattern {
        k,
        rels: (1..=k).map(|i| Rel::new(format!("R{i}"))).collect(),
        all_key_rel: Some(Rel::new(format!("S{k}"))),
        vars: (1..=k).map(|i| Var::new(format!("x{i}"))).collect(),
    }
}

/// The canonical C_k pattern: relations `R1..Rk` over variables `x1..xk`.
pub fn canonical_ck_pattern(k: usize) -> CyclePattern {
    CyclePattern {
        all_key_rel: None,
        ..canonical_ack_pattern(k)
    }
}

/// The query described by a cycle pattern.
pub fn cycle_pattern_query(pattern: &CyclePattern) -> Query {
    let k = pattern.k;
    let mut atoms: Vec<Atom> = (0..k)
        .map(|i| {
            Atom::new(
                pattern.rels[i].clone(),
                vec![Term::Variable(pattern.vars[i].clone())],
                vec![Term::Variable(pattern.vars[(i + 1) % k].clone())],
            )
        })
        .collect();
    if let Some(s) = &pattern.all_key_rel {
        atoms.push(Atom::new(
            s.clone(),
            pattern.vars.iter().cloned().map(Term::Variable).collect(),
            Vec::new(),
        ));
    }
    Query::new(atoms).expect("cycle patterns have consistent signatures")
}

/// Validates a database schema against a cycle pattern: pattern relations
/// must carry their expected signatures; with `exact`, no other relations
/// may be declared.
pub fn check_pattern_schema(db: &UncertainDatabase, pattern: &CyclePattern, exact: bool) -> Result<()> {
    let k = pattern.k;
    if k < 2 {
        return Err(Error::PreconditionViolated("cycle queries need k >= 2".into()));
    }
    let mut expected: BTreeMap<&Rel, Signature> = pattern
        .rels
        .iter()
        .map(|r| (r, Signature { arity: 2, key_len: 1 }))
        .collect();
    if let Some(s) = &pattern.all_key_rel {
        expected.insert(s, Signature { arity: k, key_len: k });
    }
    for (rel, sig) in db.schema() {
        match expected.get(rel) {
            Some(want) if want != sig => {
                return Err(Error::SchemaMismatch(format!(
                    "relation {rel} has signature {sig}, expected {want}"
                )));
            }
            Some(_) => {}
            None if exact => {
                return Err(Error::SchemaMismatch(format!(
                    "unexpected relation {rel} for a k={k} cycle query"
                )));
            }
            None => {}
        }
    }
    Ok(())
}

/// Decides CERTAINTY(AC_k) over the canonical schema `{R1..Rk, Sk}`.
pub fn certain_cycle_query(db: &UncertainDatabase, k: usize, limits: &Limits) -> Result<CertainAnswer> {
    certain_cycle_query_exactness(db, &canonical_ack_pattern(k), limits, true)
}

/// Decides CERTAINTY(AC_k) for a recognized pattern over arbitrary relation
/// names; relations outside the pattern are purified away.
pub fn certain_cycle_query_with(
    db: &UncertainDatabase,
    pattern: &CyclePattern,
    limits: &Limits,
) -> Result<CertainAnswer> {
    certain_cycle_query_exactness(db, pattern, limits, false)
}

fn certain_cycle_query_exactness(
    db: &UncertainDatabase,
    pattern: &CyclePattern,
    _limits: &Limits,
    exact: bool,
) -> Result<CertainAnswer> {
    if pattern.all_key_rel.is_none() {
        return Err(Error::PreconditionViolated(
            "pattern lacks the all-key relation; use certain_ck for C_k".into(),
        ));
    }
    check_pattern_schema(db, pattern, exact)?;
    let q = cycle_pattern_query(pattern);
    let (dbp, trace) = purify_traced(db, &q);

    let k = pattern.k;
    let pos_of: BTreeMap<&Rel, usize> = pattern.rels.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let s_rel = pattern.all_key_rel.as_ref().expect("checked above");

    // position-tagged vertices
    let mut vertex_set: BTreeSet<(usize, Constant)> = BTreeSet::new();
    for fact in dbp.facts() {
        if let Some(&i) = pos_of.get(&fact.rel) {
            vertex_set.insert((i, fact.key[0].clone()));
            vertex_set.insert(((i + 1) % k, fact.nonkey[0].clone()));
        }
    }
    let vertices: Vec<(usize, Constant)> = vertex_set.into_iter().collect();
    let vid: BTreeMap<&(usize, Constant), usize> =
        vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    let mut edge_fact: BTreeMap<(usize, usize), Fact> = BTreeMap::new();
    for fact in dbp.facts() {
        if let Some(&i) = pos_of.get(&fact.rel) {
            let from = vid[&(i, fact.key[0].clone())];
            let to = vid[&((i + 1) % k, fact.nonkey[0].clone())];
            adjacency[from].push(to);
            edge_fact.insert((from, to), fact.clone());
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    // forbidden cycles from the all-key facts, keyed by their class-0 vertex
    let mut forbidden: BTreeSet<Vec<usize>> = BTreeSet::new();
    for fact in dbp.facts_of(s_rel) {
        let cycle: Option<Vec<usize>> = fact
            .key
            .iter()
            .enumerate()
            .map(|(i, c)| vid.get(&(i, c.clone())).copied())
            .collect();
        if let Some(cycle) = cycle {
            forbidden.insert(cycle);
        }
    }

    let not_certain = |witness_facts: BTreeSet<Fact>| -> CertainAnswer {
        let witness = trace.lift(&Repair { facts: witness_facts });
        debug_assert!(witness.is_repair_of(db));
        CertainAnswer {
            certain: false,
            method: Method::CycleQuery,
            witness: Some(witness),
        }
    };

    if dbp.is_empty() {
        return Ok(not_certain(BTreeSet::new()));
    }

    let sccs = strongly_connected_components(vertices.len(), &adjacency);
    let mut marked_out: Vec<Option<usize>> = vec![None; vertices.len()];

    for scc in &sccs {
        let members: BTreeSet<usize> = scc.iter().copied().collect();
        if members.len() < 2 {
            return Err(Error::PreconditionViolated(
                "purified cycle-query graph cannot have trivial components".into(),
            ));
        }
        let cycle = find_k_cycle_outside(&adjacency, &vertices, &members, &forbidden, k)
            .or_else(|| find_longer_cycle(&adjacency, &members, k));
        match cycle {
            None => {
                // every marking would close a forbidden cycle here
                return Ok(CertainAnswer {
                    certain: true,
                    method: Method::CycleQuery,
                    witness: None,
                });
            }
            Some(cycle) => {
                for w in cycle.windows(2) {
                    marked_out[w[0]] = Some(w[1]);
                }
                marked_out[*cycle.last().expect("cycle nonempty")] = Some(cycle[0]);
            }
        }
    }

    // complete the marking along shortest paths to marked vertices
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (from, tos) in adjacency.iter().enumerate() {
        for &to in tos {
            reverse[to].push(from);
        }
    }
    let mut dist: Vec<Option<usize>> = vec![None; vertices.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (v, m) in marked_out.iter().enumerate() {
        if m.is_some() {
            dist[v] = Some(0);
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued vertices have distances");
        for &w in &reverse[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    for v in 0..vertices.len() {
        if marked_out[v].is_some() {
            continue;
        }
        let d = dist[v].ok_or_else(|| {
            Error::PreconditionViolated("vertex cannot reach its component's marked cycle".into())
        })?;
        let next = adjacency[v]
            .iter()
            .copied()
            .find(|&w| dist[w] == Some(d - 1))
            .ok_or_else(|| {
                Error::PreconditionViolated("shortest-path completion lost its way".into())
            })?;
        marked_out[v] = Some(next);
    }

    let mut witness_facts: BTreeSet<Fact> = BTreeSet::new();
    for (v, m) in marked_out.iter().enumerate() {
        let to = m.expect("every vertex is marked after completion");
        witness_facts.insert(edge_fact[&(v, to)].clone());
    }
    witness_facts.extend(dbp.facts_of(s_rel).into_iter().cloned());
    Ok(not_certain(witness_facts))
}

/// A k-cycle inside the component whose vertex sequence is not forbidden,
/// as a vertex list starting at a class-0 vertex.
fn find_k_cycle_outside(
    adjacency: &[Vec<usize>],
    vertices: &[(usize, Constant)],
    members: &BTreeSet<usize>,
    forbidden: &BTreeSet<Vec<usize>>,
    k: usize,
) -> Option<Vec<usize>> {
    fn dfs(
        adjacency: &[Vec<usize>],
        members: &BTreeSet<usize>,
        forbidden: &BTreeSet<Vec<usize>>,
        start: usize,
        path: &mut Vec<usize>,
        k: usize,
    ) -> bool {
        if path.len() == k {
            let last = *path.last().expect("path of length k");
            return adjacency[last].contains(&start) && !forbidden.contains(path);
        }
        let last = *path.last().expect("path nonempty");
        for &w in &adjacency[last] {
            if members.contains(&w) {
                path.push(w);
                if dfs(adjacency, members, forbidden, start, path, k) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }

    for &v in members {
        if vertices[v].0 != 0 {
            continue;
        }
        let mut path = vec![v];
        if dfs(adjacency, members, forbidden, v, &mut path, k) {
            return Some(path);
        }
    }
    None
}

/// An elementary cycle of length strictly greater than k inside the
/// component: a k-edge path `a1..a(k+1)` with `a(k+1) != a1` plus a return
/// path that avoids every edge leaving `a1..ak`.
fn find_longer_cycle(
    adjacency: &[Vec<usize>],
    members: &BTreeSet<usize>,
    k: usize,
) -> Option<Vec<usize>> {
    fn extend(
        adjacency: &[Vec<usize>],
        members: &BTreeSet<usize>,
        path: &mut Vec<usize>,
        k: usize,
        out: &mut Option<Vec<usize>>,
    ) -> bool {
        if path.len() == k + 1 {
            let first = path[0];
            let last = *path.last().expect("nonempty");
            if first == last {
                return false;
            }
            let blocked: BTreeSet<usize> = path[..k].iter().copied().collect();
            if let Some(ret) = shortest_path_avoiding(adjacency, members, last, first, &blocked) {
                let mut cycle = path.clone();
                cycle.extend(ret[1..ret.len() - 1].iter().copied());
                *out = Some(cycle);
                return true;
            }
            return false;
        }
        let last = *path.last().expect("nonempty");
        for &w in &adjacency[last] {
            if members.contains(&w) {
                path.push(w);
                if extend(adjacency, members, path, k, out) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }

    for &v in members {
        let mut path = vec![v];
        let mut out = None;
        if extend(adjacency, members, &mut path, k, &mut out) {
            return out;
        }
    }
    None
}

fn shortest_path_avoiding(
    adjacency: &[Vec<usize>],
    members: &BTreeSet<usize>,
    from: usize,
    to: usize,
    blocked_sources: &BTreeSet<usize>,
) -> Option<Vec<usize>> {
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(from);
    let mut seen = BTreeSet::new();
    seen.insert(from);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        if blocked_sources.contains(&v) {
            continue;
        }
        for &w in &adjacency[v] {
            if members.contains(&w) && seen.insert(w) {
                prev.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// C_k via all-key augmentation
// ---------------------------------------------------------------------------

/// Decides CERTAINTY(C_k) over the canonical schema `{R1..Rk}`.
pub fn certain_ck(db: &UncertainDatabase, k: usize, limits: &Limits) -> Result<CertainAnswer> {
    certain_ck_exactness(db, &canonical_ck_pattern(k), limits, true)
}

/// Decides CERTAINTY(C_k) for a recognized pattern over arbitrary relation
/// names.
pub fn certain_ck_with(
    db: &UncertainDatabase,
    pattern: &CyclePattern,
    limits: &Limits,
) -> Result<CertainAnswer> {
    certain_ck_exactness(db, pattern, limits, false)
}

/// The all-key augmentation of a C_k database: one `S_k` fact for every
/// k-tuple over the active domain, guarded by `limits.domain_limit`. The
/// augmented database is in CERTAINTY(AC_k) iff the input is in
/// CERTAINTY(C_k).
pub fn ck_augmentation(
    db: &UncertainDatabase,
    pattern: &CyclePattern,
    limits: &Limits,
) -> Result<(UncertainDatabase, CyclePattern)> {
    if pattern.all_key_rel.is_some() {
        return Err(Error::PreconditionViolated(
            "pattern already has an all-key relation".into(),
        ));
    }
    let k = pattern.k;
    let domain: Vec<Constant> = db.active_domain().into_iter().collect();
    let tuple_count = (domain.len() as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if tuple_count > limits.domain_limit {
        return Err(Error::DomainLimitExceeded {
            domain: domain.len(),
            exponent: k,
            limit: limits.domain_limit,
        });
    }

    let mut s_name = format!("S{k}");
    while db.schema().contains_key(&Rel::new(&s_name)) {
        s_name.push('_');
    }
    let s_rel = Rel::new(s_name);

    let mut augmented = db.clone();
    augmented.declare(s_rel.clone(), Signature { arity: k, key_len: k })?;
    let mut indices = vec![0usize; k];
    if !domain.is_empty() {
        loop {
            let key: Vec<Constant> = indices.iter().map(|&i| domain[i].clone()).collect();
            augmented.insert(Fact::new(s_rel.clone(), key, Vec::new()))?;
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                indices[pos] += 1;
                if indices[pos] < domain.len() {
                    break;
                }
                indices[pos] = 0;
            }
            if indices.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    let aug_pattern = CyclePattern {
        all_key_rel: Some(s_rel),
        ..pattern.clone()
    };
    Ok((augmented, aug_pattern))
}

fn certain_ck_exactness(
    db: &UncertainDatabase,
    pattern: &CyclePattern,
    limits: &Limits,
    exact: bool,
) -> Result<CertainAnswer> {
    check_pattern_schema(db, pattern, exact)?;
    let (augmented, aug_pattern) = ck_augmentation(db, pattern, limits)?;
    let s_rel = aug_pattern
        .all_key_rel
        .clone()
        .expect("augmentation adds the all-key relation");
    let answer = certain_cycle_query_exactness(&augmented, &aug_pattern, limits, false)?;
    Ok(CertainAnswer {
        certain: answer.certain,
        method: Method::CycleQuery,
        witness: answer.witness.map(|w| {
            let facts: BTreeSet<Fact> =
                w.facts.into_iter().filter(|f| f.rel != s_rel).collect();
            let witness = Repair { facts };
            debug_assert!(witness.is_repair_of(db));
            witness
        }),
    })
}
