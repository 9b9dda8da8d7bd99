use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate identification constraint: {0}")]
    DegenerateConstraint(String),

    #[error("cosine similarity undefined: row {0} has zero norm")]
    UndefinedSimilarity(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem too large for the dense path: {dim} coordinates exceeds limit {limit}; use the pairwise sampler instead")]
    TooLarge { dim: usize, limit: usize },

    #[error("effective sample size undefined: {0}")]
    UndefinedEss(String),

    #[error("R-hat undefined: {0}")]
    UndefinedRhat(String),

    #[error("insufficient draws: {got} < {needed}")]
    InsufficientDraws { got: usize, needed: usize },

    #[error("posterior mean is unidentified without an identification constraint")]
    UnidentifiedMean,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
