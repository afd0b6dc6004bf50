use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("index error: {0}")]
    IndexError(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("perturbation drives tile ({row},{col}) negative: {value}")]
    NegativeTile {
        /// 1-indexed tile row.
        row: usize,
        /// 1-indexed tile column.
        col: usize,
        value: String,
    },

    #[error("range error: {0}")]
    Range(String),

    #[error("permutations of order one are not supported here: {0}")]
    OrderOne(String),

    #[error("mixed orders: {0}")]
    MixedOrders(String),

    #[error("duplicate permutation in set: {0}")]
    DuplicateMember(String),

    #[error("gradients are linearly dependent; run classify_set for a kernel instead")]
    DependentGradients,

    #[error("solver failed: {0}")]
    SolveFailed(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
