//! Exhaustive repair enumeration: the oracle the polynomial engines are
//! checked against.

use crate::db::{Repair, UncertainDatabase};
use crate::error::{Error, Result};
use crate::eval::satisfies;
use crate::query::Query;
use crate::solver::{CertainAnswer, Limits, Method};

fn guard(db: &UncertainDatabase, limits: &Limits) -> Result<u128> {
    let count = db.repair_count();
    if count > limits.repair_limit {
        Err(Error::RepairLimitExceeded {
            count,
            limit: limits.repair_limit,
        })
    } else {
        Ok(count)
    }
}

/// The first repair (in enumeration order) that falsifies `q`, if any.
pub fn find_falsifying_repair(
    db: &UncertainDatabase,
    q: &Query,
    limits: &Limits,
) -> Result<Option<Repair>> {
    guard(db, limits)?;
    for repair in db.repairs() {
        if !satisfies(&repair.facts, q) {
            return Ok(Some(repair));
        }
    }
    Ok(None)
}

/// Exact decision by enumeration, stopping at the first falsifying repair.
pub fn certain_bruteforce(
    db: &UncertainDatabase,
    q: &Query,
    limits: &Limits,
) -> Result<CertainAnswer> {
    let witness = find_falsifying_repair(db, q, limits)?;
    Ok(CertainAnswer {
        certain: witness.is_none(),
        method: Method::Bruteforce,
        witness,
    })
}

/// `(satisfying, total)` over the full repair space.
pub fn count_satisfying_repairs(
    db: &UncertainDatabase,
    q: &Query,
    limits: &Limits,
) -> Result<(u128, u128)> {
    let total = guard(db, limits)?;
    let satisfying = db
        .repairs()
        .filter(|r| satisfies(&r.facts, q))
        .count() as u128;
    Ok((satisfying, total))
}
