//! Random instance generators for randomized testing and experimentation.
//!
//! Everything is deterministic given the RNG. Queries come out self-join
//! free by construction; acyclicity is by rejection.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use crate::attack::attack_graph;
use crate::db::{Fact, UncertainDatabase};
use crate::jointree::join_tree;
use crate::prob::BidDatabase;
use crate::query::{Atom, Constant, Query, Rel, Term, Var};

#[derive(Debug, Clone)]
pub struct QueryGenConfig {
    pub max_atoms: usize,
    pub max_vars: usize,
    pub max_arity: usize,
    /// Probability that a term position holds a constant.
    pub constant_prob: f64,
}

impl Default for QueryGenConfig {
    fn default() -> Self {
        QueryGenConfig {
            max_atoms: 5,
            max_vars: 6,
            max_arity: 4,
            constant_prob: 0.08,
        }
    }
}

fn random_term(rng: &mut impl Rng, cfg: &QueryGenConfig) -> Term {
    if rng.gen_bool(cfg.constant_prob) {
        Term::constant(format!("k{}", rng.gen_range(0..2)))
    } else {
        Term::var(format!("v{}", rng.gen_range(0..cfg.max_vars)))
    }
}

/// A random acyclic self-join-free query (rejection sampling on the GYO
/// test).
pub fn random_acyclic_query(rng: &mut impl Rng, cfg: &QueryGenConfig) -> Query {
    loop {
        let n_atoms = rng.gen_range(1..=cfg.max_atoms);
        let mut atoms = Vec::with_capacity(n_atoms);
        for i in 0..n_atoms {
            let arity = rng.gen_range(1..=cfg.max_arity);
            let key_len = rng.gen_range(1..=arity);
            let terms: Vec<Term> = (0..arity).map(|_| random_term(rng, cfg)).collect();
            atoms.push(Atom::new(
                Rel::new(format!("Q{i}")),
                terms[..key_len].to_vec(),
                terms[key_len..].to_vec(),
            ));
        }
        let Ok(q) = Query::new(atoms) else { continue };
        if q.len() == n_atoms && join_tree(&q).is_ok() {
            return q;
        }
    }
}

/// A random query whose attack cycles are all weak and terminal: one to
/// three mutually attacking pairs that share only key-prefix variables,
/// as in the six-atom worked example. Occasionally an acyclic-attack-graph
/// query is produced instead, which the same solver covers.
pub fn random_terminal_weak_query(rng: &mut impl Rng) -> Query {
    loop {
        let q = if rng.gen_bool(0.3) {
            random_acyclic_query(
                rng,
                &QueryGenConfig {
                    max_atoms: 3,
                    max_vars: 4,
                    max_arity: 3,
                    constant_prob: 0.05,
                },
            )
        } else {
            let pairs = rng.gen_range(1..=3usize);
            let shared_pool = ["g0", "g1"];
            let mut atoms = Vec::new();
            for i in 0..pairs {
                let mut shared: Vec<Term> = Vec::new();
                for name in shared_pool.iter() {
                    if pairs > 1 && rng.gen_bool(0.6) {
                        shared.push(Term::var(*name));
                    }
                }
                let a = Term::var(format!("u{}", 2 * i));
                let b = Term::var(format!("u{}", 2 * i + 1));
                let tail: Vec<Term> = if rng.gen_bool(0.4) {
                    vec![Term::var(format!("w{i}"))]
                } else {
                    Vec::new()
                };
                let mut key_f = shared.clone();
                key_f.push(a.clone());
                let mut nonkey_f = vec![b.clone()];
                nonkey_f.extend(tail.clone());
                let mut key_g = shared.clone();
                key_g.push(b.clone());
                let mut nonkey_g = vec![a.clone()];
                nonkey_g.extend(tail.clone());
                atoms.push(Atom::new(Rel::new(format!("Q{}", 2 * i)), key_f, nonkey_f));
                atoms.push(Atom::new(Rel::new(format!("Q{}", 2 * i + 1)), key_g, nonkey_g));
            }
            Query::new(atoms).expect("pair family is well formed")
        };
        if let Ok(graph) = attack_graph(&q) {
            if graph.all_cycles_weak_and_terminal() {
                return q;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DbGenConfig {
    pub max_facts: usize,
    pub domain_size: usize,
    /// How many full query embeddings to seed into the database.
    pub max_seeds: usize,
}

impl Default for DbGenConfig {
    fn default() -> Self {
        DbGenConfig {
            max_facts: 12,
            domain_size: 6,
            max_seeds: 2,
        }
    }
}

/// A random database over the query's schema: a few full embeddings of the
/// query, plus noise facts over a small domain extended with the query's
/// constants.
pub fn random_db_for(rng: &mut impl Rng, q: &Query, cfg: &DbGenConfig) -> UncertainDatabase {
    let mut pool: Vec<Constant> = (0..cfg.domain_size)
        .map(|i| Constant::new(format!("d{i}")))
        .collect();
    pool.extend(q.constants());
    let mut db = UncertainDatabase::empty();
    for (rel, sig) in q.signatures() {
        db.declare(rel.clone(), *sig).expect("fresh relation");
    }
    if q.is_empty() || pool.is_empty() {
        return db;
    }
    let pick = |rng: &mut dyn rand::RngCore, pool: &[Constant]| {
        pool[(rng.next_u32() as usize) % pool.len()].clone()
    };

    let seeds = rng.gen_range(0..=cfg.max_seeds);
    for _ in 0..seeds {
        let valuation: BTreeMap<Var, Constant> = q
            .vars()
            .into_iter()
            .map(|v| (v, pick(rng, &pool)))
            .collect();
        for atom in q.atoms() {
            if db.len() >= cfg.max_facts {
                break;
            }
            db.insert(crate::eval::apply(atom, &valuation)).expect("schema matches");
        }
    }
    while db.len() < cfg.max_facts && rng.gen_bool(0.7) {
        let atoms = q.atoms();
        let atom = &atoms[rng.gen_range(0..atoms.len())];
        let sig = atom.signature();
        let values: Vec<Constant> = (0..sig.arity).map(|_| pick(rng, &pool)).collect();
        let fact = Fact::new(
            atom.rel.clone(),
            values[..sig.key_len].to_vec(),
            values[sig.key_len..].to_vec(),
        );
        db.insert(fact).expect("schema matches");
    }
    db
}

/// A random database over the gadget schema `{R0: <2,1>, S0: <3,2>}`,
/// biased toward joins so the purified part is usually nonempty.
pub fn random_gadget_db(rng: &mut impl Rng, max_facts: usize) -> UncertainDatabase {
    let dom: Vec<Constant> = (0..4).map(|i| Constant::new(format!("n{i}"))).collect();
    let mut db = UncertainDatabase::empty();
    db.declare(Rel::new("R0"), crate::query::Signature { arity: 2, key_len: 1 })
        .unwrap();
    db.declare(Rel::new("S0"), crate::query::Signature { arity: 3, key_len: 2 })
        .unwrap();
    let n = rng.gen_range(0..=max_facts);
    let mut r_facts: Vec<(Constant, Constant)> = Vec::new();
    for _ in 0..n {
        if r_facts.is_empty() || rng.gen_bool(0.45) {
            let x = dom[rng.gen_range(0..dom.len())].clone();
            let y = dom[rng.gen_range(0..dom.len())].clone();
            db.insert(Fact::new(Rel::new("R0"), vec![x.clone()], vec![y.clone()]))
                .unwrap();
            r_facts.push((x, y));
        } else {
            // close a join for some existing R0 fact
            let (x, y) = r_facts[rng.gen_range(0..r_facts.len())].clone();
            let z = dom[rng.gen_range(0..dom.len())].clone();
            let x = if rng.gen_bool(0.8) {
                x
            } else {
                dom[rng.gen_range(0..dom.len())].clone()
            };
            db.insert(Fact::new(Rel::new("S0"), vec![y, z], vec![x])).unwrap();
        }
    }
    db
}

/// A random database over the canonical cycle schema: `R1..Rk` and, when
/// `with_all_key` holds, `Sk` facts drawn from the k-fold domain product.
pub fn random_cycle_db(
    rng: &mut impl Rng,
    k: usize,
    with_all_key: bool,
    max_facts: usize,
) -> UncertainDatabase {
    let dom: Vec<Constant> = (0..3).map(|i| Constant::new(format!("d{i}"))).collect();
    let mut db = UncertainDatabase::empty();
    for i in 1..=k {
        db.declare(
            Rel::new(format!("R{i}")),
            crate::query::Signature { arity: 2, key_len: 1 },
        )
        .unwrap();
    }
    if with_all_key {
        db.declare(
            Rel::new(format!("S{k}")),
            crate::query::Signature { arity: k, key_len: k },
        )
        .unwrap();
    }
    let budget = rng.gen_range(0..=max_facts);
    while db.len() < budget {
        if with_all_key && rng.gen_bool(0.35) {
            let tuple: Vec<Constant> = (0..k)
                .map(|_| dom[rng.gen_range(0..dom.len())].clone())
                .collect();
            db.insert(Fact::new(Rel::new(format!("S{k}")), tuple, Vec::new()))
                .unwrap();
        } else {
            let i = rng.gen_range(1..=k);
            let a = dom[rng.gen_range(0..dom.len())].clone();
            let b = dom[rng.gen_range(0..dom.len())].clone();
            db.insert(Fact::new(Rel::new(format!("R{i}")), vec![a], vec![b]))
                .unwrap();
        }
    }
    db
}

/// Random exact probabilities for a database: some blocks sum to one, the
/// rest leave probability mass unassigned.
pub fn random_bid(rng: &mut impl Rng, db: &UncertainDatabase) -> BidDatabase {
    let mut prob = BTreeMap::new();
    for block in db.blocks() {
        let full = rng.gen_bool(0.45);
        let weights: Vec<u32> = block
            .facts
            .iter()
            .map(|_| rng.gen_range(if full { 1..=3 } else { 0..=3 }))
            .collect();
        let mut total: u32 = weights.iter().sum();
        if !full {
            total += rng.gen_range(1..=3);
        }
        if total == 0 {
            total = 1;
        }
        for (fact, w) in block.facts.into_iter().zip(weights) {
            prob.insert(
                fact,
                BigRational::new(BigInt::from(w), BigInt::from(total)),
            );
        }
    }
    BidDatabase::new(db.clone(), prob).expect("weights sum to at most one per block")
}
