//! Bayesian skip-gram embeddings with Polya-Gamma Gibbs sampling and a
//! Laplace approximation around the MAP estimate.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod laplace;
mod linalg;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    EmbeddingState, IdentificationConstraint, PairCount, PairStats, PosteriorDraws, PriorSpec, Side,
    Vocabulary,
};
