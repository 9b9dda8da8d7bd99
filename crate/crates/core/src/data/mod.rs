//! Turning text or ground-truth embeddings into pair statistics.

mod corpus;
mod sim;
mod vocab;

pub use corpus::{extract_pairs, positive_pair_count, split_holdout, CorpusConfig};
pub use sim::{
    load_truth, save_truth, sim_embedding, sim_pairs, zipf_probabilities, PairLaw, SimConfig,
    SimulationTruth,
};
pub use vocab::{build_vocab, tokenize};
