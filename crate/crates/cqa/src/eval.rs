//! Query satisfaction: does a set of facts embed a conjunctive query?
//!
//! A world satisfies `q` when some valuation over vars(q) maps every atom of
//! `q` onto a fact of the world. The search is plain backtracking over a
//! per-relation fact index, choosing the most-bound atom next.

use std::collections::{BTreeMap, BTreeSet};

use crate::db::Fact;
use crate::query::{Atom, Constant, Query, Term, Var};

/// A total assignment of constants to (some) variables.
pub type Valuation = BTreeMap<Var, Constant>;

/// Extends `val` so that `atom` maps exactly onto `fact`, or fails.
pub fn unify(atom: &Atom, fact: &Fact, val: &Valuation) -> Option<Valuation> {
    if atom.rel != fact.rel
        || atom.key.len() != fact.key.len()
        || atom.nonkey.len() != fact.nonkey.len()
    {
        return None;
    }
    let mut out = val.clone();
    let pairs = atom
        .key
        .iter()
        .zip(fact.key.iter())
        .chain(atom.nonkey.iter().zip(fact.nonkey.iter()));
    for (term, value) in pairs {
        match term {
            Term::Constant(c) => {
                if c != value {
                    return None;
                }
            }
            Term::Variable(v) => match out.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), value.clone());
                }
            },
        }
    }
    Some(out)
}

/// Applies a valuation to an atom; every variable of the atom must be bound.
pub fn apply(atom: &Atom, val: &Valuation) -> Fact {
    let conv = |terms: &[Term]| {
        terms
            .iter()
            .map(|t| match t {
                Term::Constant(c) => c.clone(),
                Term::Variable(v) => val
                    .get(v)
                    .unwrap_or_else(|| panic!("valuation misses variable {v}"))
                    .clone(),
            })
            .collect()
    };
    Fact::new(atom.rel.clone(), conv(&atom.key), conv(&atom.nonkey))
}

fn bound_vars(atom: &Atom, val: &Valuation) -> usize {
    atom.vars().iter().filter(|v| val.contains_key(*v)).count()
}

fn search(
    index: &BTreeMap<&crate::query::Rel, Vec<&Fact>>,
    remaining: &mut Vec<&Atom>,
    val: &Valuation,
) -> Option<Valuation> {
    if remaining.is_empty() {
        return Some(val.clone());
    }
    // choose the atom with the most bound variables
    let pos = (0..remaining.len())
        .max_by_key(|&i| bound_vars(remaining[i], val))
        .expect("remaining is nonempty");
    let atom = remaining.swap_remove(pos);
    let candidates = index.get(&atom.rel).map(|v| v.as_slice()).unwrap_or(&[]);
    for fact in candidates {
        if let Some(next) = unify(atom, fact, val) {
            if let Some(found) = search(index, remaining, &next) {
                remaining.push(atom);
                return Some(found);
            }
        }
    }
    remaining.push(atom);
    None
}

/// A valuation embedding `q` into `world`, extending `seed`, if any exists.
pub fn find_embedding_seeded(
    world: &BTreeSet<Fact>,
    q: &Query,
    seed: &Valuation,
) -> Option<Valuation> {
    let mut index: BTreeMap<&crate::query::Rel, Vec<&Fact>> = BTreeMap::new();
    for fact in world {
        index.entry(&fact.rel).or_default().push(fact);
    }
    let mut remaining: Vec<&Atom> = q.atoms().iter().collect();
    search(&index, &mut remaining, seed)
}

/// A valuation embedding `q` into `world`, if any exists. The empty query
/// is satisfied by every world.
pub fn find_embedding(world: &BTreeSet<Fact>, q: &Query) -> Option<Valuation> {
    find_embedding_seeded(world, q, &Valuation::new())
}

/// True iff the world satisfies the query.
pub fn satisfies(world: &BTreeSet<Fact>, q: &Query) -> bool {
    find_embedding(world, q).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::parse_database;
    use crate::query::parse_query;

    fn world(text: &str) -> BTreeSet<Fact> {
        parse_database(text).unwrap().facts().clone()
    }

    #[test]
    fn fig1_repair_satisfies_with_witness() {
        let w = world(
            "@relation C 3 2\n@relation R 2 1\n\
             C PODS 2016 Rome\nC KDD 2017 Rome\nR PODS A\nR KDD A\n",
        );
        let q = parse_query("C(x,y;'Rome') & R(x;'A')").unwrap();
        let emb = find_embedding(&w, &q).unwrap();
        for atom in q.atoms() {
            assert!(w.contains(&apply(atom, &emb)));
        }
        // x = PODS, y = 2016 is one of the embeddings
        let mut seed = Valuation::new();
        seed.insert(Var::new("x"), Constant::new("PODS"));
        seed.insert(Var::new("y"), Constant::new("2016"));
        assert!(find_embedding_seeded(&w, &q, &seed).is_some());
    }

    #[test]
    fn falsifying_repair_fails() {
        let w = world(
            "@relation C 3 2\n@relation R 2 1\n\
             C PODS 2016 Paris\nC KDD 2017 Rome\nR PODS A\nR KDD B\n",
        );
        let q = parse_query("C(x,y;'Rome') & R(x;'A')").unwrap();
        assert!(!satisfies(&w, &q));
    }

    #[test]
    fn empty_query_is_always_satisfied() {
        assert!(satisfies(&BTreeSet::new(), &Query::empty()));
        let w = world("@relation R 2 1\nR a b\n");
        assert!(satisfies(&w, &Query::empty()));
    }

    #[test]
    fn empty_world_fails_nonempty_query() {
        let q = parse_query("R(x;y)").unwrap();
        assert!(!satisfies(&BTreeSet::new(), &q));
    }

    #[test]
    fn repeated_variable_forces_equal_values() {
        let w = world("@relation R 2 1\nR a b\n");
        let q = parse_query("R(x;x)").unwrap();
        assert!(!satisfies(&w, &q));
        let w2 = world("@relation R 2 1\nR a a\n");
        assert!(satisfies(&w2, &q));
    }

    #[test]
    fn seeded_embedding_pins_variables() {
        let w = world("@relation R 2 1\nR a b\nR c d\n");
        let q = parse_query("R(x;y)").unwrap();
        let mut seed = Valuation::new();
        seed.insert(Var::new("x"), Constant::new("c"));
        let emb = find_embedding_seeded(&w, &q, &seed).unwrap();
        assert_eq!(emb[&Var::new("y")], Constant::new("d"));
        seed.insert(Var::new("y"), Constant::new("b"));
        assert!(find_embedding_seeded(&w, &q, &seed).is_none());
    }
}
