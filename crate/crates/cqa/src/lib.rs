//! Certain query answering over uncertain databases with primary keys.
//!
//! An uncertain database may violate its primary keys; a repair keeps
//! exactly one fact from every block of key-equal facts. For a Boolean
//! conjunctive query `q`, CERTAINTY(q) asks whether every repair of a given
//! database satisfies `q`. This crate classifies the complexity of
//! CERTAINTY(q) for self-join-free queries through the attack graph, and
//! decides concrete instances:
//!
//! - [`query`]: query text, the data model, functional dependencies and
//!   attribute closures;
//! - [`jointree`]: hypergraph acyclicity and join trees (GYO reduction);
//! - [`attack`] and [`classify`]: attack graphs, weak/strong cycles, and
//!   the complexity verdict;
//! - [`db`], [`eval`], [`purify`]: databases, blocks, repairs, query
//!   satisfaction, purification;
//! - [`solver`]: brute force over repairs, the weak-terminal-cycle
//!   recursion, and the cycle-query marking algorithm;
//! - [`reduce`]: the executable strong-cycle hardness gadget;
//! - [`prob`] and [`safety`]: block-independent-disjoint probabilistic
//!   databases, exact Pr(q), and the IsSafe rule system;
//! - [`gen`]: random instance generators for testing.
//!
//! ```
//! use cqa::query::parse_query;
//! use cqa::classify::classify_complexity;
//!
//! let q = parse_query("R(u,'a';x) & S(y;x,z) & T(x;y) & P(x;z)")?;
//! let verdict = classify_complexity(&q);
//! assert_eq!(verdict.class_name(), "CONP_COMPLETE");
//! # Ok::<(), cqa::Error>(())
//! ```

pub mod attack;
pub mod classify;
pub mod db;
pub mod dot;
pub mod error;
pub mod eval;
pub mod gen;
pub mod jointree;
pub mod prob;
pub mod purify;
pub mod query;
pub mod reduce;
pub mod safety;
pub mod scc;
pub mod solver;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

/// The book chapters double as documentation and as compiled examples:
/// `cargo test --doc` runs every Rust snippet in the guide.
pub mod guide {
    #[doc = include_str!("../../../book/src/01-uncertain-databases.md")]
    pub mod ch01_uncertain_databases {}
    #[doc = include_str!("../../../book/src/02-queries.md")]
    pub mod ch02_queries {}
    #[doc = include_str!("../../../book/src/03-join-trees.md")]
    pub mod ch03_join_trees {}
    #[doc = include_str!("../../../book/src/04-attack-graphs.md")]
    pub mod ch04_attack_graphs {}
    #[doc = include_str!("../../../book/src/05-solvers.md")]
    pub mod ch05_solvers {}
    #[doc = include_str!("../../../book/src/06-hardness-gadget.md")]
    pub mod ch06_hardness_gadget {}
    #[doc = include_str!("../../../book/src/07-probabilistic.md")]
    pub mod ch07_probabilistic {}
    #[doc = include_str!("../../../book/src/08-cli.md")]
    pub mod ch08_cli {}
}
