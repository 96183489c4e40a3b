//! Purification: dropping blocks of facts that no embedding of the query
//! can use.
//!
//! A database is purified relative to `q` when every fact occurs in some
//! valuation image `θ(q)` contained in the database. Removing the whole
//! block of a non-embeddable fact, to fixpoint, preserves membership in
//! CERTAINTY(q); recording the removed facts lets a falsifying repair of
//! the purified database be lifted back to the original.

use std::collections::BTreeSet;

use crate::db::{Fact, Repair, UncertainDatabase};
use crate::eval::{find_embedding_seeded, unify, Valuation};
use crate::query::Query;

/// Removal log of one purification run, in removal order. `anchors[i]` is
/// the non-embeddable fact whose block was removed at step `i`.
#[derive(Debug, Clone, Default)]
pub struct PurifyTrace {
    pub anchors: Vec<Fact>,
}

impl PurifyTrace {
    /// Turns a repair of the purified database into a repair of the
    /// original: each removed block gets back its anchor fact, which cannot
    /// create a new embedding of the query.
    pub fn lift(&self, repair: &Repair) -> Repair {
        let mut facts = repair.facts.clone();
        for anchor in self.anchors.iter().rev() {
            facts.insert(anchor.clone());
        }
        Repair { facts }
    }
}

/// True iff every fact of `db` occurs in some embedding of `q` into `db`.
pub fn is_purified(db: &UncertainDatabase, q: &Query) -> bool {
    db.facts().iter().all(|fact| embeds(db.facts(), q, fact))
}

fn embeds(world: &BTreeSet<Fact>, q: &Query, fact: &Fact) -> bool {
    q.atoms().iter().any(|atom| {
        if atom.rel != fact.rel {
            return false;
        }
        match unify(atom, fact, &Valuation::new()) {
            Some(seed) => find_embedding_seeded(world, q, &seed).is_some(),
            None => false,
        }
    })
}

/// The purified database and the removal log.
pub fn purify_traced(db: &UncertainDatabase, q: &Query) -> (UncertainDatabase, PurifyTrace) {
    let mut current = db.clone();
    let mut trace = PurifyTrace::default();
    loop {
        let stale = current
            .facts()
            .iter()
            .find(|fact| !embeds(current.facts(), q, fact))
            .cloned();
        match stale {
            None => return (current, trace),
            Some(anchor) => {
                let block: BTreeSet<Fact> = current.block_of(&anchor).into_iter().collect();
                let remaining: Vec<Fact> = current
                    .facts()
                    .iter()
                    .filter(|f| !block.contains(*f))
                    .cloned()
                    .collect();
                current = current.restrict_to(remaining);
                trace.anchors.push(anchor);
            }
        }
    }
}

/// The purified database; see [`purify_traced`].
pub fn purify(db: &UncertainDatabase, q: &Query) -> UncertainDatabase {
    purify_traced(db, q).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::parse_database;
    use crate::query::parse_query;

    #[test]
    fn worked_example_purifies_to_empty() {
        let db = parse_database("@relation R 2 1\n@relation S 2 1\nR a b\nS b a\nS b c\n").unwrap();
        let q = parse_query("R(x;y) & S(y;x)").unwrap();
        let (purified, trace) = purify_traced(&db, &q);
        assert!(purified.is_empty());
        assert_eq!(trace.anchors.len(), 2);
    }

    #[test]
    fn purified_database_is_unchanged() {
        let db = parse_database("@relation R 2 1\n@relation S 2 1\nR a b\nS b a\n").unwrap();
        let q = parse_query("R(x;y) & S(y;x)").unwrap();
        assert!(is_purified(&db, &q));
        assert_eq!(purify(&db, &q), db);
    }

    #[test]
    fn purify_is_idempotent() {
        let db = parse_database(
            "@relation R 2 1\n@relation S 2 1\nR a b\nR a c\nS b a\nS c d\n",
        )
        .unwrap();
        let q = parse_query("R(x;y) & S(y;x)").unwrap();
        let once = purify(&db, &q);
        assert!(is_purified(&once, &q));
        assert_eq!(purify(&once, &q), once);
    }

    #[test]
    fn fig1_purifies_to_empty_for_the_conference_query() {
        let db = crate::testutil::fig1_db();
        let q = crate::testutil::fig1_query();
        let purified = purify(&db, &q);
        assert!(purified.is_empty());
    }

    #[test]
    fn lifted_repair_covers_all_blocks() {
        let db = parse_database(
            "@relation R 2 1\n@relation S 2 1\nR a b\nR a c\nS b a\nS c d\n",
        )
        .unwrap();
        let q = parse_query("R(x;y) & S(y;x)").unwrap();
        let (purified, trace) = purify_traced(&db, &q);
        for repair in purified.repairs() {
            let lifted = trace.lift(&repair);
            assert!(lifted.is_repair_of(&db));
        }
    }

    #[test]
    fn unrelated_relations_are_dropped() {
        let db = parse_database("@relation R 2 1\n@relation Z 1 1\nR a b\nZ q\n").unwrap();
        let q = parse_query("R(x;y)").unwrap();
        let purified = purify(&db, &q);
        assert_eq!(purified.len(), 1);
        assert!(purified.facts_of(&crate::query::Rel::new("Z")).is_empty());
    }
}
