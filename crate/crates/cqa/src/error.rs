use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("relation {relation} used with signature <{found_arity},{found_key}> but declared <{arity},{key_len}>")]
    SignatureConflict {
        relation: String,
        arity: usize,
        key_len: usize,
        found_arity: usize,
        found_key: usize,
    },

    #[error("fact for {relation} has {found} values, expected {expected}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown relation {0}")]
    UnknownRelation(String),

    #[error("atom {0} does not occur in the query")]
    AtomNotInQuery(String),

    #[error("query has no join tree")]
    CyclicQuery,

    #[error("query has a self-join on relation {0}")]
    SelfJoin(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("repair count {count} exceeds the limit {limit}")]
    RepairLimitExceeded { count: u128, limit: u128 },

    #[error("world count {count} exceeds the limit {limit}")]
    WorldLimitExceeded { count: u128, limit: u128 },

    #[error("domain size {domain}^{exponent} exceeds the limit {limit}")]
    DomainLimitExceeded {
        domain: usize,
        exponent: usize,
        limit: u128,
    },

    #[error("invalid probability {0}")]
    InvalidProbability(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
