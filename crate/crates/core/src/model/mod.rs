//! Model types and the SGNS posterior.

mod constraint;
mod identify;
mod likelihood;
mod prior;
mod state;
mod stats;

pub use constraint::{IdentificationConstraint, MAX_CONDITION};
pub use identify::canonicalize;
pub use likelihood::{
    co_prob, co_prob_matrix, cosine_similarity, grad_log_posterior, log_likelihood, log_posterior,
    log_prior, log_sigmoid, rmse_co, sigmoid, Gradient,
};
pub use prior::PriorSpec;
pub use state::{EmbeddingState, Side};
pub(crate) use state::dot;
pub use stats::{PairCount, PairStats, PairStatsBuilder};

use crate::error::{invalid, Result};

/// Ordered vocabulary; a word's id is its position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: std::collections::HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return invalid("vocabulary must not be empty");
        }
        let mut index = std::collections::HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return invalid(format!("duplicate token {t:?}"));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }
}

/// Draws from one chain (or one approximate posterior), in order.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    draws: Vec<EmbeddingState>,
    burn_in: usize,
    seed: u64,
    constraint: Option<IdentificationConstraint>,
}

impl PosteriorDraws {
    pub fn new(
        draws: Vec<EmbeddingState>,
        burn_in: usize,
        seed: u64,
        constraint: Option<IdentificationConstraint>,
    ) -> Result<Self> {
        if let Some(first) = draws.first() {
            if draws.iter().any(|d| !d.same_shape(first)) {
                return invalid("all draws must share V and K");
            }
            if let Some(c) = &constraint {
                if draws.iter().any(|d| !c.is_satisfied_by(d)) {
                    return invalid("every draw must satisfy the identification constraint");
                }
            }
        }
        Ok(Self { draws, burn_in, seed, constraint })
    }

    pub fn draws(&self) -> &[EmbeddingState] {
        &self.draws
    }

    pub fn into_draws(self) -> Vec<EmbeddingState> {
        self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn constraint(&self) -> Option<&IdentificationConstraint> {
        self.constraint.as_ref()
    }

    /// `(V, K)` of the draws, if any.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.draws.first().map(|d| (d.vocab_size(), d.dim()))
    }
}
