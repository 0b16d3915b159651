use thiserror::Error;

use crate::lattice::GroupElement;
use crate::environment::MultiIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid environment law: {0}")]
    InvalidLaw(String),

    /// The history has zero probability under the law (its mixed moment vanishes).
    #[error("impossible history {0}")]
    ImpossibleHistory(MultiIndex),

    #[error("no observations for history {0}")]
    NoObservations(MultiIndex),

    #[error("site {0} was never departed from")]
    NeverDeparted(GroupElement),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("moment table lacks entry {0}")]
    InsufficientTable(MultiIndex),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate table: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
