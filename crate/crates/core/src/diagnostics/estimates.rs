use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::ScalarTrace;
use crate::error::{invalid, Error, Result};
use crate::model::{co_prob, cosine_similarity, log_likelihood, EmbeddingState, PairStats, PosteriorDraws};

pub const MIN_COVERAGE_DRAWS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub level: f64,
    pub fraction_covered: f64,
    pub pairs_evaluated: usize,
}

/// Credible interval of one co-occurrence probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairInterval {
    pub w: usize,
    pub v: usize,
    pub lo: f64,
    pub hi: f64,
    pub truth: f64,
    pub covered: bool,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed intervals for all `V^2` ordered pairs, row-major by target.
pub fn coverage_intervals(draws: &PosteriorDraws, truth: &EmbeddingState, level: f64) -> Result<Vec<PairInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return invalid("level must lie in (0, 1)");
    }
    if draws.len() < MIN_COVERAGE_DRAWS {
        return Err(Error::InsufficientDraws { got: draws.len(), needed: MIN_COVERAGE_DRAWS });
    }
    // truth may come from a model of a different dimension
    if draws.shape().map(|s| s.0) != Some(truth.vocab_size()) {
        return invalid("draws and truth disagree on V");
    }
    let v_size = truth.vocab_size();
    let tail = (1.0 - level) / 2.0;
    let rows: Vec<Vec<PairInterval>> = (0..v_size)
        .into_par_iter()
        .map(|w| {
            let mut probs = vec![Vec::with_capacity(draws.len()); v_size];
            for d in draws.draws() {
                for (v, p) in probs.iter_mut().enumerate() {
                    p.push(co_prob(d, w, v));
                }
            }
            probs
                .into_iter()
                .enumerate()
                .map(|(v, mut p)| {
                    p.sort_by(f64::total_cmp);
                    let lo = quantile_sorted(&p, tail);
                    let hi = quantile_sorted(&p, 1.0 - tail);
                    let t = co_prob(truth, w, v);
                    PairInterval { w, v, lo, hi, truth: t, covered: lo <= t && t <= hi }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

pub fn coverage(draws: &PosteriorDraws, truth: &EmbeddingState, level: f64) -> Result<CoverageReport> {
    let rows = coverage_intervals(draws, truth, level)?;
    Ok(summarize_coverage(&rows, level))
}

pub fn summarize_coverage(rows: &[PairInterval], level: f64) -> CoverageReport {
    let covered = rows.iter().filter(|r| r.covered).count();
    CoverageReport {
        level,
        fraction_covered: covered as f64 / rows.len() as f64,
        pairs_evaluated: rows.len(),
    }
}

/// Per-observation hold-out log likelihood.
pub fn holdout_ll(theta: &EmbeddingState, test: &PairStats) -> Result<f64> {
    let n = test.total_observations();
    if n == 0 {
        return invalid("hold-out statistics are empty");
    }
    Ok(log_likelihood(test, theta)? / n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosineTrace {
    pub trace: ScalarTrace,
    /// Draws dropped because `rho_w` or `rho_v` was zero.
    pub skipped: usize,
}

pub fn cosine_posterior(draws: &PosteriorDraws, w: usize, v: usize) -> Result<CosineTrace> {
    let mut values = Vec::with_capacity(draws.len());
    let mut skipped = 0;
    let mut last_err = None;
    for d in draws.draws() {
        match cosine_similarity(d, w, v) {
            Ok(c) => values.push(c),
            Err(e @ Error::UndefinedSimilarity(_)) => {
                skipped += 1;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        log::warn!("cosine({w},{v}): skipped {skipped} draws with a zero row");
    }
    if values.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::InvalidInput("no draws".into())));
    }
    Ok(CosineTrace { trace: ScalarTrace::new(values, format!("cosine_{w}_{v}"))?, skipped })
}

/// OLS slope of `log rmse` on `log N`.
pub fn convergence_slope(points: &[(u64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return invalid("need at least 3 points");
    }
    let mut ns: Vec<u64> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != points.len() {
        return invalid("sample sizes must be distinct");
    }
    if points.iter().any(|&(n, r)| n == 0 || !(r > 0.0) || !r.is_finite()) {
        return invalid("sample sizes and RMSE values must be positive");
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (super::chain::mean(&xs), super::chain::mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
