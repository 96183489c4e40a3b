//! Block-independent-disjoint probabilistic databases.
//!
//! A BID database assigns an exact rational probability to every fact;
//! facts of one block are disjoint events (probabilities sum to at most 1),
//! distinct blocks are independent. A possible world picks at most one fact
//! per block; its probability is the product of the chosen facts'
//! probabilities times, for each untouched block, one minus the block's
//! probability mass. Pr(q) sums the worlds that satisfy q.
//!
//! The file format extends the database format with a per-fact suffix
//! `: p/q`; facts without a suffix default to `1/blocksize`.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::db::{parse_lines, Fact, UncertainDatabase};
use crate::error::{Error, Result};
use crate::eval::satisfies;
use crate::query::Query;
use crate::solver::{solve, Limits, MethodChoice};

/// An uncertain database with exact per-fact probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidDatabase {
    base: UncertainDatabase,
    prob: BTreeMap<Fact, BigRational>,
}

impl BidDatabase {
    /// Validates that every fact has a probability in [0,1] and every block
    /// sums to at most 1.
    pub fn new(base: UncertainDatabase, prob: BTreeMap<Fact, BigRational>) -> Result<Self> {
        for fact in base.facts() {
            let p = prob
                .get(fact)
                .ok_or_else(|| Error::InvalidProbability(format!("no probability for {fact}")))?;
            if p < &BigRational::zero() || p > &BigRational::one() {
                return Err(Error::InvalidProbability(format!("{p} for {fact}")));
            }
        }
        let db = BidDatabase { base, prob };
        for block in db.base.blocks() {
            let sum = db.block_mass(&block.facts);
            if sum > BigRational::one() {
                return Err(Error::InvalidProbability(format!(
                    "block of {} sums to {sum} > 1",
                    block.facts[0]
                )));
            }
        }
        Ok(db)
    }

    /// Uniform-repair distribution: every fact gets `1/blocksize`, so every
    /// block sums to one and all repairs are equally likely.
    pub fn uniform(base: UncertainDatabase) -> Self {
        let mut prob = BTreeMap::new();
        for block in base.blocks() {
            let p = BigRational::new(BigInt::from(1), BigInt::from(block.facts.len()));
            for fact in block.facts {
                prob.insert(fact, p.clone());
            }
        }
        BidDatabase { base, prob }
    }

    pub fn base(&self) -> &UncertainDatabase {
        &self.base
    }

    pub fn probability(&self, fact: &Fact) -> Option<&BigRational> {
        self.prob.get(fact)
    }

    fn block_mass(&self, facts: &[Fact]) -> BigRational {
        facts
            .iter()
            .map(|f| self.prob[f].clone())
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Number of possible worlds (saturating).
    pub fn world_count(&self) -> u128 {
        self.base
            .blocks()
            .iter()
            .fold(1u128, |acc, b| acc.saturating_mul(b.facts.len() as u128 + 1))
    }

    /// Canonical text form with explicit reduced fractions.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (rel, sig) in self.base.schema() {
            out.push_str(&format!("@relation {} {} {}\n", rel, sig.arity, sig.key_len));
        }
        for fact in self.base.facts() {
            let p = &self.prob[fact];
            out.push_str(&format!("{} : {}/{}\n", fact.render(), p.numer(), p.denom()));
        }
        out
    }
}

fn parse_rational(token: &str) -> Result<BigRational> {
    let (numer, denom) = match token.split_once('/') {
        Some((n, d)) => (n, d),
        None => (token, "1"),
    };
    let numer: BigInt = numer
        .parse()
        .map_err(|_| Error::InvalidProbability(token.to_string()))?;
    let denom: BigInt = denom
        .parse()
        .map_err(|_| Error::InvalidProbability(token.to_string()))?;
    if denom.is_zero() {
        return Err(Error::InvalidProbability(token.to_string()));
    }
    Ok(BigRational::new(numer, denom))
}

/// Parses the BID file format. Facts without a `: p/q` suffix get the
/// uniform in-block default `1/blocksize`.
pub fn parse_bid_database(text: &str) -> Result<BidDatabase> {
    let mut explicit: BTreeMap<Fact, BigRational> = BTreeMap::new();
    let base = parse_lines(text, |_, fact, suffix| {
        if let Some(token) = suffix {
            explicit.insert(fact, parse_rational(token)?);
        }
        Ok(())
    })?;
    let mut prob = BTreeMap::new();
    for block in base.blocks() {
        let size = block.facts.len();
        for fact in block.facts {
            let p = explicit.get(&fact).cloned().unwrap_or_else(|| {
                BigRational::new(BigInt::from(1), BigInt::from(size))
            });
            prob.insert(fact, p);
        }
    }
    BidDatabase::new(base, prob)
}

pub fn load_bid_database(path: impl AsRef<Path>) -> Result<BidDatabase> {
    parse_bid_database(&std::fs::read_to_string(path)?)
}

/// Exact Pr(q): the probability mass of the possible worlds satisfying q.
/// Guarded by the world count against `limits.repair_limit`.
pub fn prob_bruteforce(pdb: &BidDatabase, q: &Query, limits: &Limits) -> Result<BigRational> {
    let count = pdb.world_count();
    if count > limits.repair_limit {
        return Err(Error::WorldLimitExceeded {
            count,
            limit: limits.repair_limit,
        });
    }
    let blocks = pdb.base.blocks();
    let skip_weight: Vec<BigRational> = blocks
        .iter()
        .map(|b| BigRational::one() - pdb.block_mass(&b.facts))
        .collect();

    let mut total = BigRational::zero();
    // depth-first over one choice (a fact or none) per block
    let mut choice: Vec<Option<usize>> = vec![None; blocks.len()];
    fn walk(
        pdb: &BidDatabase,
        q: &Query,
        blocks: &[crate::db::Block],
        skip_weight: &[BigRational],
        choice: &mut Vec<Option<usize>>,
        depth: usize,
        weight: BigRational,
        total: &mut BigRational,
    ) {
        if weight.is_zero() {
            return;
        }
        if depth == blocks.len() {
            let world: std::collections::BTreeSet<Fact> = choice
                .iter()
                .enumerate()
                .filter_map(|(b, c)| c.map(|i| blocks[b].facts[i].clone()))
                .collect();
            if satisfies(&world, q) {
                *total += weight;
            }
            return;
        }
        choice[depth] = None;
        walk(
            pdb,
            q,
            blocks,
            skip_weight,
            choice,
            depth + 1,
            weight.clone() * skip_weight[depth].clone(),
            total,
        );
        for i in 0..blocks[depth].facts.len() {
            choice[depth] = Some(i);
            let p = pdb.prob[&blocks[depth].facts[i]].clone();
            walk(
                pdb,
                q,
                blocks,
                skip_weight,
                choice,
                depth + 1,
                weight.clone() * p,
                total,
            );
        }
        choice[depth] = None;
    }
    walk(
        pdb,
        q,
        &blocks,
        &skip_weight,
        &mut choice,
        0,
        BigRational::one(),
        &mut total,
    );
    Ok(total)
}

/// The restriction of the database to the blocks whose probabilities sum to
/// exactly 1: the blocks a positive-probability world can never miss.
pub fn certain_blocks_restrict(pdb: &BidDatabase) -> UncertainDatabase {
    let mut keep = Vec::new();
    for block in pdb.base.blocks() {
        if pdb.block_mass(&block.facts) == BigRational::one() {
            keep.extend(block.facts);
        }
    }
    pdb.base.restrict_to(keep)
}

/// Pr(q) = 1 iff the restriction to full blocks is in CERTAINTY(q); decided
/// without enumerating worlds.
pub fn prob_is_one(pdb: &BidDatabase, q: &Query, limits: &Limits) -> Result<bool> {
    let restricted = certain_blocks_restrict(pdb);
    Ok(solve(&restricted, q, MethodChoice::Auto, limits)?.certain)
}
