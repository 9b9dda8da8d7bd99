//! Polya-Gamma blocked Gibbs sampling.

mod polya_gamma;
mod sampler;

pub use polya_gamma::{pg_mean, pg_variance, sample_pg, sample_pg1, GAUSSIAN_THRESHOLD};
pub use sampler::{
    conditional_update, random_init, run_chain, sample_conditional, ConditionalDesign, GibbsConfig,
};
