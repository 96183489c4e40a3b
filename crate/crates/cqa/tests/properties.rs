//! Property tests for the algebraic invariants.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use cqa::eval::satisfies;
use cqa::gen::{random_acyclic_query, random_db_for, DbGenConfig, QueryGenConfig};
use cqa::query::{attribute_closure, fd_set, key_closure, key_closure_plus, parse_query, Var};

fn small_query_cfg() -> QueryGenConfig {
    QueryGenConfig {
        max_atoms: 4,
        max_vars: 5,
        max_arity: 3,
        constant_prob: 0.1,
    }
}

proptest! {
    #[test]
    fn closure_is_extensive_idempotent_monotone(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_acyclic_query(&mut rng, &small_query_cfg());
        let fds = fd_set(&q);
        prop_assert_eq!(fds.deps.len(), q.len());

        let vars: Vec<Var> = q.vars().into_iter().collect();
        let take = |mask: u64| -> BTreeSet<Var> {
            vars.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| v.clone())
                .collect()
        };
        let x = take(seed);
        let y = take(seed.rotate_left(13) | seed);

        let cx = attribute_closure(&x, &fds);
        prop_assert!(x.is_subset(&cx), "extensive");
        prop_assert_eq!(attribute_closure(&cx, &fds), cx.clone(), "idempotent");
        if x.is_subset(&y) {
            let cy = attribute_closure(&y, &fds);
            prop_assert!(cx.is_subset(&cy), "monotone in the start set");
        }
        // monotone in the dependency set
        let mut fewer = fds.clone();
        fewer.deps.truncate(fds.deps.len() / 2);
        prop_assert!(attribute_closure(&x, &fewer).is_subset(&cx));
    }

    #[test]
    fn key_closures_nest(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_acyclic_query(&mut rng, &small_query_cfg());
        for atom in q.atoms() {
            let key = atom.key_vars();
            let k = key_closure(atom, &q).unwrap();
            let k_plus = key_closure_plus(atom, &q).unwrap();
            prop_assert!(key.is_subset(&k));
            prop_assert!(k.is_subset(&k_plus));
            prop_assert!(k_plus.is_subset(&q.vars()));
        }
    }

    #[test]
    fn parse_render_round_trip(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_acyclic_query(&mut rng, &small_query_cfg());
        let reparsed = parse_query(&q.render()).unwrap();
        prop_assert_eq!(reparsed, q);
    }

    #[test]
    fn repairs_are_distinct_consistent_maximal(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_acyclic_query(&mut rng, &small_query_cfg());
        let db = random_db_for(&mut rng, &q, &DbGenConfig {
            max_facts: 8,
            domain_size: 4,
            max_seeds: 1,
        });
        let repairs: Vec<_> = db.repairs().collect();
        prop_assert_eq!(repairs.len() as u128, db.repair_count());
        let distinct: BTreeSet<_> = repairs.iter().map(|r| r.facts.clone()).collect();
        prop_assert_eq!(distinct.len(), repairs.len());
        for r in &repairs {
            prop_assert!(r.is_repair_of(&db));
        }
    }

    #[test]
    fn satisfaction_is_monotone_in_the_world(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_acyclic_query(&mut rng, &small_query_cfg());
        let db = random_db_for(&mut rng, &q, &DbGenConfig::default());
        if satisfies(&db.facts().iter().take(db.len() / 2).cloned().collect(), &q) {
            prop_assert!(satisfies(db.facts(), &q));
        }
    }
}
