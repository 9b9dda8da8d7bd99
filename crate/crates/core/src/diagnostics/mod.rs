//! Chain and estimator quality metrics.

mod chain;
mod estimates;
mod report;

pub use chain::{co_prob_trace, coordinate_trace, ess, ess_unclamped, posterior_mean, split_rhat, ScalarTrace};
pub use estimates::{
    convergence_slope, cosine_posterior, coverage, coverage_intervals, holdout_ll, quantile_sorted,
    summarize_coverage, CosineTrace, CoverageReport, PairInterval, MIN_COVERAGE_DRAWS,
};
pub use report::{write_coverage_csv, write_scalar_table, write_slope_csv, write_trace_csv};
