//! Deciding CERTAINTY(q) on concrete databases.
//!
//! Three engines: exhaustive repair enumeration (the oracle all others are
//! tested against), the recursion for queries whose attack cycles are all
//! weak and terminal, and the marking algorithm for the cycle queries AC_k
//! and C_k. [`solve`] routes between them.

mod bruteforce;
mod cycle_query;
mod terminal_weak;

pub use bruteforce::{certain_bruteforce, count_satisfying_repairs, find_falsifying_repair};
pub use cycle_query::{
    canonical_ack_pattern, canonical_ck_pattern, certain_ck, certain_ck_with,
    certain_cycle_query, certain_cycle_query_with, check_pattern_schema, ck_augmentation,
    cycle_pattern_query,
};
pub use terminal_weak::certain_terminal_weak;

use crate::attack::attack_graph;
use crate::classify::recognize_cycle_query;
use crate::db::{Repair, UncertainDatabase};
use crate::error::{Error, Result};
use crate::jointree::join_tree;
use crate::query::{has_self_join, Query};

/// Resource guards for the exhaustive engines.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximum number of repairs the brute-force engine will enumerate.
    pub repair_limit: u128,
    /// Maximum |D|^k when augmenting a C_k database with all-key facts.
    pub domain_limit: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            repair_limit: 1 << 24,
            domain_limit: 10_000_000,
        }
    }
}

/// Which engine produced an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bruteforce,
    TerminalWeak,
    CycleQuery,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Bruteforce => "bruteforce",
            Method::TerminalWeak => "terminal_weak",
            Method::CycleQuery => "cycle_query",
        }
    }
}

/// Outcome of a CERTAINTY(q) decision. A witness, when present, is a repair
/// of the input database that falsifies the query.
#[derive(Debug, Clone)]
pub struct CertainAnswer {
    pub certain: bool,
    pub method: Method,
    pub witness: Option<Repair>,
}

/// Solver selection for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Fixed(Method),
}

/// Decides whether every repair of `db` satisfies `q`.
///
/// With [`MethodChoice::Auto`], the polynomial engines are used whenever
/// their preconditions hold (weak terminal attack cycles, or an AC_k / C_k
/// query shape) and brute force is the fallback. A fixed choice runs that
/// engine, failing when its preconditions do not hold.
pub fn solve(
    db: &UncertainDatabase,
    q: &Query,
    choice: MethodChoice,
    limits: &Limits,
) -> Result<CertainAnswer> {
    match choice {
        MethodChoice::Fixed(Method::Bruteforce) => certain_bruteforce(db, q, limits),
        MethodChoice::Fixed(Method::TerminalWeak) => certain_terminal_weak(db, q, limits),
        MethodChoice::Fixed(Method::CycleQuery) => match recognize_cycle_query(q) {
            Some(pattern) if pattern.all_key_rel.is_some() => {
                certain_cycle_query_with(db, &pattern, limits)
            }
            Some(pattern) => certain_ck_with(db, &pattern, limits),
            None => Err(Error::PreconditionViolated(format!(
                "query {q} is not a cycle query (AC_k or C_k)"
            ))),
        },
        MethodChoice::Auto => {
            if !has_self_join(q) && join_tree(q).is_ok() {
                let graph = attack_graph(q)?;
                if graph.all_cycles_weak_and_terminal() {
                    return certain_terminal_weak(db, q, limits);
                }
                if let Some(pattern) = recognize_cycle_query(q) {
                    if pattern.all_key_rel.is_some() {
                        return certain_cycle_query_with(db, &pattern, limits);
                    }
                }
            } else if let Some(pattern) = recognize_cycle_query(q) {
                if pattern.all_key_rel.is_none() && pattern.k >= 3 {
                    return certain_ck_with(db, &pattern, limits);
                }
            }
            certain_bruteforce(db, q, limits)
        }
    }
}
