//! SGNS log likelihood, prior, posterior and gradient, plus the
//! transformation-invariant comparison metrics built on `sigma(rho_w . alpha_v)`.

use std::f64::consts::PI;

use super::{dot, EmbeddingState, IdentificationConstraint, PairStats, PriorSpec};
use crate::error::{invalid, Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log sigma(x) = -softplus(-x)`, stable for large `|x|`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn check_stats(stats: &PairStats, theta: &EmbeddingState) -> Result<()> {
    if stats.vocab_size() != theta.vocab_size() {
        return invalid(format!(
            "pair statistics have V={} but embedding has V={}",
            stats.vocab_size(),
            theta.vocab_size()
        ));
    }
    Ok(())
}

fn check_constraint(theta: &EmbeddingState, constraint: Option<&IdentificationConstraint>) -> Result<()> {
    match constraint {
        Some(c) => c.check_compatible(theta),
        None => Ok(()),
    }
}

pub fn log_likelihood(stats: &PairStats, theta: &EmbeddingState) -> Result<f64> {
    check_stats(stats, theta)?;
    theta.check_finite()?;
    Ok(stats
        .entries()
        .iter()
        .map(|e| {
            let x = theta.dot(e.w, e.v);
            e.n_pos as f64 * log_sigmoid(x) + e.n_neg as f64 * log_sigmoid(-x)
        })
        .sum())
}

/// Sum of independent `N(0, 1/lambda)` log densities. Constrained context rows
/// are constants and do not contribute.
pub fn log_prior(
    theta: &EmbeddingState,
    prior: &PriorSpec,
    constraint: Option<&IdentificationConstraint>,
) -> Result<f64> {
    theta.check_finite()?;
    check_constraint(theta, constraint)?;
    let lambda = prior.lambda();
    let norm = 0.5 * (lambda.ln() - (2.0 * PI).ln());
    let k = theta.dim();
    let sq_rho: f64 = theta.rho().iter().map(|x| x * x).sum();
    let mut sq_alpha = 0.0;
    let mut count = theta.rho().len();
    for w in 0..theta.vocab_size() {
        if constraint.is_some_and(|c| c.contains(w)) {
            continue;
        }
        sq_alpha += theta.alpha_row(w).iter().map(|x| x * x).sum::<f64>();
        count += k;
    }
    Ok(count as f64 * norm - 0.5 * lambda * (sq_rho + sq_alpha))
}

pub fn log_posterior(
    stats: &PairStats,
    theta: &EmbeddingState,
    prior: &PriorSpec,
    constraint: Option<&IdentificationConstraint>,
) -> Result<f64> {
    Ok(log_likelihood(stats, theta)? + log_prior(theta, prior, constraint)?)
}

/// Gradient of the log posterior with respect to both matrices (row-major, `V x K`).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl Gradient {
    pub fn sup_norm(&self) -> f64 {
        self.rho.iter().chain(&self.alpha).fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn grad_log_posterior(
    stats: &PairStats,
    theta: &EmbeddingState,
    prior: &PriorSpec,
    constraint: Option<&IdentificationConstraint>,
) -> Result<Gradient> {
    check_stats(stats, theta)?;
    check_constraint(theta, constraint)?;
    let k = theta.dim();
    let lambda = prior.lambda();
    let mut rho: Vec<f64> = theta.rho().iter().map(|x| -lambda * x).collect();
    let mut alpha: Vec<f64> = theta.alpha().iter().map(|x| -lambda * x).collect();
    for e in stats.entries() {
        let (rw, av) = (theta.rho_row(e.w), theta.alpha_row(e.v));
        // d/dx [n+ log s(x) + n- log s(-x)] = n+ - (n+ + n-) s(x)
        let g = e.n_pos as f64 - e.total() as f64 * sigmoid(dot(rw, av));
        for i in 0..k {
            rho[e.w * k + i] += g * av[i];
            alpha[e.v * k + i] += g * rw[i];
        }
    }
    if let Some(c) = constraint {
        for &w in c.indices() {
            alpha[w * k..(w + 1) * k].fill(0.0);
        }
    }
    Ok(Gradient { rho, alpha })
}

/// Co-occurrence probability `sigma(rho_w . alpha_v)`.
pub fn co_prob(theta: &EmbeddingState, w: usize, v: usize) -> f64 {
    sigmoid(theta.dot(w, v))
}

/// All `V^2` co-occurrence probabilities, row-major by target word.
pub fn co_prob_matrix(theta: &EmbeddingState) -> Vec<f64> {
    let n = theta.vocab_size();
    let mut out = Vec::with_capacity(n * n);
    for w in 0..n {
        for v in 0..n {
            out.push(co_prob(theta, w, v));
        }
    }
    out
}

/// Root mean squared difference of all `V^2` co-occurrence probabilities.
/// Only `V` has to agree; the dimensions may differ.
pub fn rmse_co(a: &EmbeddingState, b: &EmbeddingState) -> Result<f64> {
    if a.vocab_size() != b.vocab_size() {
        return invalid(format!(
            "vocabulary sizes differ: {} vs {}",
            a.vocab_size(),
            b.vocab_size()
        ));
    }
    let n = a.vocab_size();
    let mut sum = 0.0;
    for w in 0..n {
        for v in 0..n {
            let d = co_prob(a, w, v) - co_prob(b, w, v);
            sum += d * d;
        }
    }
    Ok((sum / (n * n) as f64).sqrt())
}

/// Cosine similarity of the target vectors of `w` and `v`.
pub fn cosine_similarity(theta: &EmbeddingState, w: usize, v: usize) -> Result<f64> {
    let n = theta.vocab_size();
    if w >= n || v >= n {
        return invalid(format!("word id out of range for V={n}"));
    }
    let (a, b) = (theta.rho_row(w), theta.rho_row(v));
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 {
        return Err(Error::UndefinedSimilarity(w));
    }
    if nb == 0.0 {
        return Err(Error::UndefinedSimilarity(v));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
