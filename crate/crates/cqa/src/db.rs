//! Uncertain databases: facts grouped into blocks by primary key, and their
//! repairs.
//!
//! The text format is line-based UTF-8:
//!
//! ```text
//! # schema, then facts; values are opaque whitespace-free tokens
//! @relation C 3 2
//! @relation R 2 1
//! C PODS 2016 Rome
//! R PODS A
//! ```
//!
//! Canonical save order is relations alphabetical, facts lexicographic, so
//! `save . load` is the identity on canonical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::query::{Constant, Rel, Signature};

/// A ground tuple with its key/non-key split.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub rel: Rel,
    pub key: Vec<Constant>,
    pub nonkey: Vec<Constant>,
}

impl Fact {
    pub fn new(rel: Rel, key: Vec<Constant>, nonkey: Vec<Constant>) -> Self {
        Fact { rel, key, nonkey }
    }

    pub fn values(&self) -> impl Iterator<Item = &Constant> {
        self.key.iter().chain(self.nonkey.iter())
    }

    /// key-equal: same relation and same key values.
    pub fn key_equal(&self, other: &Fact) -> bool {
        self.rel == other.rel && self.key == other.key
    }

    pub fn block_key(&self) -> BlockKey {
        BlockKey {
            rel: self.rel.clone(),
            key: self.key.clone(),
        }
    }

    /// Space-separated line form, as in the database file format.
    pub fn render(&self) -> String {
        let mut out = self.rel.0.clone();
        for v in self.values() {
            out.push(' ');
            out.push_str(&v.0);
        }
        out
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, v) in self.key.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        if !self.nonkey.is_empty() {
            write!(f, ";")?;
            for (i, v) in self.nonkey.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
        }
        write!(f, ")")
    }
}

/// Identity of a block: relation plus key values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockKey {
    pub rel: Rel,
    pub key: Vec<Constant>,
}

/// A maximal set of key-equal facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub key: BlockKey,
    pub facts: Vec<Fact>,
}

/// A database whose primary keys need not hold. Facts are stored as a set;
/// blocks are derived and independent of insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UncertainDatabase {
    schema: BTreeMap<Rel, Signature>,
    facts: BTreeSet<Fact>,
}

impl UncertainDatabase {
    pub fn empty() -> Self {
        UncertainDatabase {
            schema: BTreeMap::new(),
            facts: BTreeSet::new(),
        }
    }

    pub fn new(schema: BTreeMap<Rel, Signature>, facts: impl IntoIterator<Item = Fact>) -> Result<Self> {
        let mut db = UncertainDatabase {
            schema,
            facts: BTreeSet::new(),
        };
        for fact in facts {
            db.insert(fact)?;
        }
        Ok(db)
    }

    pub fn declare(&mut self, rel: Rel, sig: Signature) -> Result<()> {
        match self.schema.get(&rel) {
            Some(prev) if *prev != sig => Err(Error::SignatureConflict {
                relation: rel.0,
                arity: prev.arity,
                key_len: prev.key_len,
                found_arity: sig.arity,
                found_key: sig.key_len,
            }),
            _ => {
                self.schema.insert(rel, sig);
                Ok(())
            }
        }
    }

    pub fn insert(&mut self, fact: Fact) -> Result<()> {
        let sig = self
            .schema
            .get(&fact.rel)
            .ok_or_else(|| Error::UnknownRelation(fact.rel.0.clone()))?;
        if fact.key.len() != sig.key_len || fact.nonkey.len() != sig.arity - sig.key_len {
            return Err(Error::ArityMismatch {
                relation: fact.rel.0.clone(),
                expected: sig.arity,
                found: fact.key.len() + fact.nonkey.len(),
            });
        }
        self.facts.insert(fact);
        Ok(())
    }

    pub fn schema(&self) -> &BTreeMap<Rel, Signature> {
        &self.schema
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    /// A copy with the given facts only; the schema is kept whole.
    pub fn restrict_to(&self, facts: impl IntoIterator<Item = Fact>) -> UncertainDatabase {
        let facts: BTreeSet<Fact> = facts.into_iter().collect();
        debug_assert!(facts.iter().all(|f| self.facts.contains(f)));
        UncertainDatabase {
            schema: self.schema.clone(),
            facts,
        }
    }

    /// The blocks, sorted by block key. Facts are sorted within each block.
    pub fn blocks(&self) -> Vec<Block> {
        let mut blocks: Vec<Block> = Vec::new();
        for fact in &self.facts {
            match blocks.last_mut() {
                Some(b) if b.key.rel == fact.rel && b.key.key == fact.key => {
                    b.facts.push(fact.clone())
                }
                _ => blocks.push(Block {
                    key: fact.block_key(),
                    facts: vec![fact.clone()],
                }),
            }
        }
        blocks
    }

    /// The block containing the given fact, if present.
    pub fn block_of(&self, fact: &Fact) -> Vec<Fact> {
        self.facts
            .iter()
            .filter(|f| f.key_equal(fact))
            .cloned()
            .collect()
    }

    /// Consistent iff every block is a singleton.
    pub fn is_consistent(&self) -> bool {
        self.blocks().iter().all(|b| b.facts.len() == 1)
    }

    /// Number of repairs: the product of the block sizes (saturating).
    pub fn repair_count(&self) -> u128 {
        self.blocks()
            .iter()
            .fold(1u128, |acc, b| acc.saturating_mul(b.facts.len() as u128))
    }

    /// Lazy enumeration of all repairs in mixed-radix order over the sorted
    /// blocks (last block varies fastest). Needs O(#blocks) working memory.
    pub fn repairs(&self) -> Repairs {
        Repairs {
            blocks: self.blocks(),
            indices: Vec::new(),
            done: false,
        }
    }

    /// All constants occurring in the database.
    pub fn active_domain(&self) -> BTreeSet<Constant> {
        self.facts.iter().flat_map(|f| f.values().cloned()).collect()
    }

    pub fn facts_of(&self, rel: &Rel) -> Vec<&Fact> {
        self.facts.iter().filter(|f| &f.rel == rel).collect()
    }

    /// Canonical text form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (rel, sig) in &self.schema {
            out.push_str(&format!("@relation {} {} {}\n", rel, sig.arity, sig.key_len));
        }
        for fact in &self.facts {
            out.push_str(&fact.render());
            out.push('\n');
        }
        out
    }
}

/// A maximal consistent subset of its parent database: one fact per block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Repair {
    pub facts: BTreeSet<Fact>,
}

impl Repair {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Self {
        Repair {
            facts: facts.into_iter().collect(),
        }
    }

    /// Validity check against the parent database: consistent and containing
    /// exactly one fact from every block.
    pub fn is_repair_of(&self, db: &UncertainDatabase) -> bool {
        if !self.facts.iter().all(|f| db.contains(f)) {
            return false;
        }
        let blocks = db.blocks();
        if self.facts.len() != blocks.len() {
            return false;
        }
        blocks
            .iter()
            .all(|b| b.facts.iter().filter(|f| self.facts.contains(f)).count() == 1)
    }
}

/// Iterator over repairs; see [`UncertainDatabase::repairs`].
pub struct Repairs {
    blocks: Vec<Block>,
    indices: Vec<usize>,
    done: bool,
}

impl Iterator for Repairs {
    type Item = Repair;

    fn next(&mut self) -> Option<Repair> {
        if self.done {
            return None;
        }
        if self.indices.is_empty() {
            self.indices = vec![0; self.blocks.len()];
        } else {
            // odometer increment, last position fastest
            let mut pos = self.blocks.len();
            loop {
                if pos == 0 {
                    self.done = true;
                    return None;
                }
                pos -= 1;
                self.indices[pos] += 1;
                if self.indices[pos] < self.blocks[pos].facts.len() {
                    break;
                }
                self.indices[pos] = 0;
            }
        }
        if self.blocks.is_empty() {
            self.done = true;
            return Some(Repair::new([]));
        }
        Some(Repair::new(
            self.blocks
                .iter()
                .zip(&self.indices)
                .map(|(b, &i)| b.facts[i].clone()),
        ))
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses a line-based token stream shared by the plain and probabilistic
/// formats. `handle_fact` receives the fact tokens and whatever follows a
/// standalone `:` separator.
pub(crate) fn parse_lines(
    text: &str,
    mut handle_fact: impl FnMut(usize, Fact, Option<&str>) -> Result<()>,
) -> Result<UncertainDatabase> {
    let mut db = UncertainDatabase::empty();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse {
            line: lineno,
            col: 1,
            msg,
        };
        if tokens[0] == "@relation" {
            if tokens.len() != 4 {
                return Err(parse_err("expected `@relation NAME ARITY KEYLEN`".into()));
            }
            let arity: usize = tokens[2]
                .parse()
                .map_err(|_| parse_err(format!("bad arity {}", tokens[2])))?;
            let key_len: usize = tokens[3]
                .parse()
                .map_err(|_| parse_err(format!("bad key length {}", tokens[3])))?;
            let sig = Signature::new(arity, key_len).ok_or_else(|| {
                parse_err(format!("invalid signature <{arity},{key_len}>"))
            })?;
            db.declare(Rel::new(tokens[1]), sig)?;
            continue;
        }
        let suffix = match tokens.iter().position(|t| *t == ":") {
            Some(pos) => {
                if tokens.len() != pos + 2 {
                    return Err(parse_err("expected a single token after `:`".into()));
                }
                let s = tokens[pos + 1];
                tokens.truncate(pos);
                Some(s)
            }
            None => None,
        };
        let rel = Rel::new(tokens[0]);
        let sig = *db
            .schema
            .get(&rel)
            .ok_or_else(|| Error::UnknownRelation(rel.0.clone()))?;
        let values: Vec<Constant> = tokens[1..].iter().map(|t| Constant::new(*t)).collect();
        if values.len() != sig.arity {
            return Err(Error::ArityMismatch {
                relation: rel.0,
                expected: sig.arity,
                found: values.len(),
            });
        }
        let key = values[..sig.key_len].to_vec();
        let nonkey = values[sig.key_len..].to_vec();
        let fact = Fact::new(rel, key, nonkey);
        handle_fact(lineno, fact.clone(), suffix)?;
        db.insert(fact)?;
    }
    Ok(db)
}

/// Parses the plain database format.
pub fn parse_database(text: &str) -> Result<UncertainDatabase> {
    parse_lines(text, |lineno, _fact, suffix| {
        if suffix.is_some() {
            Err(Error::Parse {
                line: lineno,
                col: 1,
                msg: "probability suffix is only valid in the BID format".into(),
            })
        } else {
            Ok(())
        }
    })
}

pub fn load_database(path: impl AsRef<Path>) -> Result<UncertainDatabase> {
    parse_database(&std::fs::read_to_string(path)?)
}

pub fn save_database(db: &UncertainDatabase, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, db.render())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::FIG1;

    #[test]
    fn fig1_blocks_and_repairs() {
        let db = parse_database(FIG1).unwrap();
        let blocks = db.blocks();
        assert_eq!(blocks.len(), 4);
        let mut sizes: Vec<usize> = blocks.iter().map(|b| b.facts.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2, 2]);
        assert_eq!(db.repair_count(), 4);
        let repairs: Vec<Repair> = db.repairs().collect();
        assert_eq!(repairs.len(), 4);
        for r in &repairs {
            assert!(r.is_repair_of(&db));
        }
        let distinct: BTreeSet<&Repair> = repairs.iter().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn schema_only_file_is_empty() {
        let db = parse_database("@relation C 3 2\n").unwrap();
        assert!(db.is_empty());
        assert_eq!(db.blocks().len(), 0);
        assert_eq!(db.repair_count(), 1);
        let repairs: Vec<Repair> = db.repairs().collect();
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].facts.is_empty());
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let err = parse_database("@relation C 3 2\nC PODS 2016\n").unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { .. }), "{err}");
    }

    #[test]
    fn unknown_relation_is_an_error() {
        let err = parse_database("X a b\n").unwrap_err();
        assert!(matches!(err, Error::UnknownRelation(_)));
    }

    #[test]
    fn save_load_round_trip() {
        let db = parse_database(FIG1).unwrap();
        let canonical = db.render();
        let reloaded = parse_database(&canonical).unwrap();
        assert_eq!(reloaded, db);
        assert_eq!(reloaded.render(), canonical);
    }

    #[test]
    fn consistent_database_has_one_repair() {
        let db = parse_database("@relation R 2 1\nR a b\nR c d\n").unwrap();
        assert!(db.is_consistent());
        let repairs: Vec<Repair> = db.repairs().collect();
        assert_eq!(repairs.len(), 1);
        assert_eq!(repairs[0].facts, *db.facts());
    }

    #[test]
    fn block_partition_ignores_insertion_order() {
        let a = parse_database("@relation R 2 1\nR a b\nR a c\n").unwrap();
        let b = parse_database("@relation R 2 1\nR a c\nR a b\n").unwrap();
        assert_eq!(a.blocks(), b.blocks());
    }
}
