use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "pgembed", version, about = "Bayesian skip-gram embeddings: simulate, ingest, fit, diagnose")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Draw a ground-truth embedding and pair statistics from it.
    Simulate(SimulateArgs),
    /// Turn a text corpus into vocabulary and train/test pair statistics.
    Ingest(IngestArgs),
    /// Fit the MAP, run the Gibbs sampler or build the Laplace approximation.
    Fit(FitArgs),
    /// Write CSV diagnostics for draw stores.
    Diagnose(DiagnoseArgs),
    /// Print the per-observation hold-out log likelihood of an estimate.
    Eval(EvalArgs),
    /// Write an estimate as a text table, one word per line.
    Export(ExportArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Uniform,
    Zipf,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long = "V")]
    pub vocab_size: usize,
    #[arg(long = "K")]
    pub dim: usize,
    #[arg(long = "N")]
    pub num_pairs: u64,
    #[arg(long, value_enum, default_value_t = Law::Uniform)]
    pub law: Law,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub zipf_a: f64,
    #[arg(long, default_value_t = 2.7)]
    pub zipf_b: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    /// Exponent on unigram counts for the negative-sampling law.
    #[arg(long, default_value_t = 1.0)]
    pub noise_exponent: f64,
    #[arg(long, default_value_t = 0.1)]
    pub holdout_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Map,
    Gibbs,
    Laplace,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long = "K")]
    pub dim: usize,
    /// Prior precision.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Gibbs outer iterations, burn-in included.
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// Polya-Gamma steps per row update.
    #[arg(long = "S", default_value_t = 10)]
    pub inner_steps: usize,
    #[arg(long)]
    pub warm_start: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `last-k` or `ids:<w1>,<w2>,...` (K ids); M is read off the MAP.
    #[arg(long, default_value = "last-k")]
    pub constraint: String,
    /// Existing MAP estimate to start from instead of fitting one.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    pub map_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub map_tol: f64,
    /// Number of Laplace draws.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Report {
    Coverage,
    Ess,
    Rhat,
    Slope,
    Cosine,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    /// Draw store directory; repeat for R-hat and slope.
    #[arg(long, required = true)]
    pub draws: Vec<PathBuf>,
    /// Ground-truth embedding (`truth.bin` from `simulate`).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    pub level: f64,
    #[arg(long, value_enum)]
    pub report: Report,
    /// Comma-separated `w:v` pairs; all pairs when omitted (not for cosine).
    #[arg(long)]
    pub pairs: Option<String>,
    /// Number of pairs per draw store, in the order of `--draws` (slope only).
    #[arg(long = "N", value_delimiter = ',')]
    pub sizes: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// An embedding file, or `<draw-store-dir>:mean` for the posterior mean.
    #[arg(long)]
    pub estimate: String,
    #[arg(long)]
    pub test_stats: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// An embedding file, or `<draw-store-dir>:mean`.
    #[arg(long)]
    pub estimate: String,
    /// Vocabulary from `ingest`; word ids are used when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
