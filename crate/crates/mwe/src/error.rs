//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::model::Role;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("word id {id} out of range (vocabulary size {n})")]
    WordIdOutOfRange { id: usize, n: usize },

    #[error("relation id {id} out of range ({m} relations)")]
    RelationIdOutOfRange { id: usize, m: usize },

    #[error("cannot corrupt the {slot} slot under relation `{relation}`: support has a single word")]
    SingletonSupport { relation: String, slot: Role },

    #[error("no distinct negative for relation `{relation}` after {attempts} attempts")]
    NegativeExhausted { relation: String, attempts: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("zero-norm composed vector for word id {word} ({role} role): word looks untrained")]
    ZeroNorm { word: usize, role: Role },

    #[error("undefined correlation: a rank list is constant")]
    UndefinedCorrelation,

    #[error("correlation inputs must be equal length >= 2 (got {xs} and {ys})")]
    CorrelationInput { xs: usize, ys: usize },

    #[error("no scorable rows")]
    NoScorableRows,

    #[error("relation `{0}` is absent from the model")]
    RelationNotInModel(String),

    #[error("non-finite {what} at tuple ({head}, {rel}, {tail})")]
    NonFinite {
        what: &'static str,
        head: usize,
        rel: usize,
        tail: usize,
    },

    #[error("non-finite evaluation while perturbing coordinate {coord}")]
    NonFiniteEval { coord: usize },

    #[error("not an MWE checkpoint (bad magic)")]
    BadMagic,

    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    Version { found: u64, expected: u64 },

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
