use thiserror::Error;

/// Errors shared across the PBC pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("reference title normalizes to an empty key (raw: {raw:?})")]
    EmptyKey { raw: String },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("document has {have} references but subset size is {k}")]
    TooFewRefs { have: usize, k: usize },

    #[error("expected {expected} digests to combine, got {got}")]
    WrongArity { expected: usize, got: usize },

    #[error("subset size mismatch: {left} vs {right}")]
    MismatchedK { left: usize, right: usize },

    #[error("hash function mismatch: {left:?} vs {right:?}")]
    MismatchedHashFn { left: String, right: String },

    #[error("similarity of an empty set is undefined")]
    EmptySet,

    #[error("index contains no entries")]
    EmptyIndex,

    #[error("{j} is not a binomial number for k={k}; the intersection is likely contaminated by a hash collision")]
    NotABinomial { j: u128, k: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corrupt index file: {0}")]
    CorruptFile(String),

    #[error("malformed hex hash value: {0:?}")]
    MalformedHex(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed record at line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
}
