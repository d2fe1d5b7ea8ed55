//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("symbol {0} has no image")]
    UnmappedSymbol(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("nilpotency class {0} unsupported (use 1..=4)")]
    ClassUnsupported(usize),
    /// A size bound was hit: cosets in an enumeration, letters in a normal form.
    #[error("size bound {0} exceeded")]
    Overflow(usize),
    #[error("coset table is incomplete")]
    IncompleteTable,
    #[error("level {0} outside the supported range")]
    BadLevel(usize),
    #[error("depth {0} unsupported")]
    DepthUnsupported(usize),
    #[error("descriptions do not share the oracle's ambient group: {0}")]
    OracleMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
