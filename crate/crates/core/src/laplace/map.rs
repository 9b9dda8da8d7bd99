use serde::{Deserialize, Serialize};

use super::hessian::ParamLayout;
use super::lbfgs::minimize;
use crate::error::{invalid, Result};
use crate::model::{grad_log_posterior, log_posterior, EmbeddingState, IdentificationConstraint, PairStats, PriorSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub max_iterations: usize,
    /// Stop once the sup-norm of the free gradient drops below this.
    pub gradient_tolerance: f64,
    pub history_size: usize,
    pub seed: u64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { max_iterations: 20_000, gradient_tolerance: 1e-6, history_size: 10, seed: 0 }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.history_size == 0 {
            return invalid("MAP iteration count and history size must be positive");
        }
        if !(self.gradient_tolerance > 0.0) {
            return invalid("gradient tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapFit {
    pub theta: EmbeddingState,
    pub log_posterior: f64,
    pub grad_sup_norm: f64,
    pub iterations: usize,
    /// `false` when the iteration limit was hit or the line search stalled
    /// above the tolerance.
    pub converged: bool,
}

/// Maximize the log posterior over all coordinates except the constrained
/// context rows, which are set to `M` and held there.
pub fn fit_map(
    stats: &PairStats,
    prior: &PriorSpec,
    cfg: &MapConfig,
    init: &EmbeddingState,
    constraint: Option<&IdentificationConstraint>,
) -> Result<MapFit> {
    cfg.validate()?;
    if stats.vocab_size() != init.vocab_size() {
        return invalid("pair statistics and initial state disagree on V");
    }
    init.check_finite()?;
    let mut base = init.clone();
    if let Some(c) = constraint {
        c.check_compatible(init)?;
        c.apply(&mut base);
    }
    let layout = ParamLayout::new(base.vocab_size(), base.dim(), constraint);
    let mut work = base.clone();
    let objective = |x: &[f64]| {
        layout.scatter(x, &mut work);
        if work.check_finite().is_err() {
            return (f64::INFINITY, vec![f64::NAN; x.len()]);
        }
        let lp = log_posterior(stats, &work, prior, constraint).expect("shapes checked");
        let g = grad_log_posterior(stats, &work, prior, constraint).expect("shapes checked");
        let mut neg = layout.gather_parts(&g.rho, &g.alpha);
        neg.iter_mut().for_each(|v| *v = -*v);
        (-lp, neg)
    };
    let out = minimize(objective, layout.gather(&base), cfg.max_iterations, cfg.gradient_tolerance, cfg.history_size)?;
    layout.scatter(&out.x, &mut base);
    if !out.converged {
        log::warn!(
            "MAP stopped after {} iterations with gradient sup-norm {:.3e}",
            out.iterations,
            out.grad_sup
        );
    }
    Ok(MapFit {
        theta: base,
        log_posterior: -out.value,
        grad_sup_norm: out.grad_sup,
        iterations: out.iterations,
        converged: out.converged,
    })
}
