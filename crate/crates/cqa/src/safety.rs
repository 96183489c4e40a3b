//! The IsSafe rule system for self-join-free conjunctive queries on BID
//! probabilistic databases.
//!
//! Rules are tried in order and the first applicable one fires:
//! SE1 accepts a single ground atom; SE2 splits a query whose atoms fall
//! into variable-disjoint parts; SE3 substitutes a constant for a variable
//! shared by every key; SE4 substitutes a constant for a variable of an
//! atom with an all-constant key. A query no rule applies to is unsafe.

use std::collections::BTreeSet;
use std::fmt;

use crate::attack::ensure_self_join_free;
use crate::error::Result;
use crate::query::{Atom, Constant, Query, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Se1,
    Se2,
    Se3,
    Se4,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Se1 => "SE1",
            Rule::Se2 => "SE2",
            Rule::Se3 => "SE3",
            Rule::Se4 => "SE4",
        };
        f.write_str(s)
    }
}

/// One rule application: the query it fired on and the subqueries it left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyStep {
    pub rule: Rule,
    pub before: Query,
    pub after: Vec<Query>,
}

/// The outcome of the rule system, with the full application log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyTrace {
    pub safe: bool,
    pub steps: Vec<SafetyStep>,
    /// The first subquery no rule applied to, when unsafe.
    pub stuck: Option<Query>,
}

impl SafetyTrace {
    /// Re-runs the rule system on `q` and checks that it reproduces this
    /// trace, steps and verdict alike.
    pub fn replays(&self, q: &Query) -> bool {
        match is_safe(q) {
            Ok(fresh) => fresh == *self,
            Err(_) => false,
        }
    }
}

fn fresh_constant(q: &Query) -> Constant {
    let used = q.constants();
    let mut i = 0usize;
    loop {
        let c = Constant::new(format!("c{i}"));
        if !used.contains(&c) {
            return c;
        }
        i += 1;
    }
}

/// Connected components of the variable-sharing graph over atoms. Atoms
/// without variables are singleton components.
fn variable_components(q: &Query) -> Vec<Vec<Atom>> {
    let atoms = q.atoms();
    let n = atoms.len();
    let vars: Vec<BTreeSet<Var>> = atoms.iter().map(|a| a.vars()).collect();
    let mut component = vec![usize::MAX; n];
    let mut next = 0usize;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = next;
        while let Some(v) = stack.pop() {
            for w in 0..n {
                if component[w] == usize::MAX && !vars[v].is_disjoint(&vars[w]) {
                    component[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    let mut out = vec![Vec::new(); next];
    for (i, atom) in atoms.iter().enumerate() {
        out[component[i]].push(atom.clone());
    }
    out
}

/// Runs the rule system on a self-join-free query.
pub fn is_safe(q: &Query) -> Result<SafetyTrace> {
    ensure_self_join_free(q)?;
    let mut trace = SafetyTrace {
        safe: true,
        steps: Vec::new(),
        stuck: None,
    };
    let safe = run(q, &mut trace);
    trace.safe = safe;
    Ok(trace)
}

fn run(q: &Query, trace: &mut SafetyTrace) -> bool {
    // SE1: a single ground atom
    if q.len() == 1 && q.vars().is_empty() {
        trace.steps.push(SafetyStep {
            rule: Rule::Se1,
            before: q.clone(),
            after: Vec::new(),
        });
        return true;
    }

    // SE2: split into variable-disjoint parts
    let components = variable_components(q);
    if components.len() >= 2 {
        let after: Vec<Query> = components
            .iter()
            .map(|atoms| Query::new(atoms.clone()).expect("component of a valid query"))
            .collect();
        trace.steps.push(SafetyStep {
            rule: Rule::Se2,
            before: q.clone(),
            after: after.clone(),
        });
        return after.iter().all(|part| run(part, trace));
    }

    // SE3: a variable occurring in every key
    let mut common: Option<BTreeSet<Var>> = None;
    for atom in q.atoms() {
        let keys = atom.key_vars();
        common = Some(match common {
            None => keys,
            Some(prev) => prev.intersection(&keys).cloned().collect(),
        });
    }
    if let Some(common) = common.filter(|c| !c.is_empty()) {
        let x = common.iter().next().expect("nonempty").clone();
        let c = fresh_constant(q);
        let next = q.substitute(&x, &c);
        trace.steps.push(SafetyStep {
            rule: Rule::Se3,
            before: q.clone(),
            after: vec![next.clone()],
        });
        return run(&next, trace);
    }

    // SE4: an atom with constant key and at least one variable
    let se4_atom = q
        .atoms()
        .iter()
        .find(|a| a.key_vars().is_empty() && !a.vars().is_empty());
    if let Some(atom) = se4_atom {
        let x = atom.vars().into_iter().next().expect("atom has a variable");
        let c = fresh_constant(q);
        let next = q.substitute(&x, &c);
        trace.steps.push(SafetyStep {
            rule: Rule::Se4,
            before: q.clone(),
            after: vec![next.clone()],
        });
        return run(&next, trace);
    }

    if trace.stuck.is_none() {
        trace.stuck = Some(q.clone());
    }
    false
}
