use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polya_gamma::sample_pg;
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_with_jitter, solve_lower, solve_upper_t};
use crate::model::{dot, EmbeddingState, IdentificationConstraint, PairStats, PosteriorDraws, PriorSpec, Side};
use crate::rng::{stream, StreamRng, TAG_GIBBS, TAG_INIT};

const JITTER: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub outer_iterations: usize,
    pub burn_in: usize,
    /// Polya-Gamma steps per row update.
    pub inner_steps: usize,
    pub seed: u64,
    /// Start each row's inner loop from its current value instead of a fresh
    /// `N(0, I/K)` draw.
    pub warm_start_inner: bool,
    /// Worker threads per half-sweep. Does not affect results.
    pub parallel_width: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            outer_iterations: 2000,
            burn_in: 1000,
            inner_steps: 10,
            seed: 0,
            warm_start_inner: false,
            parallel_width: 1,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0 {
            return invalid("outer iterations must be positive");
        }
        if self.burn_in >= self.outer_iterations {
            return invalid("burn-in must be smaller than the number of iterations");
        }
        if self.inner_steps == 0 {
            return invalid("inner Polya-Gamma steps must be positive");
        }
        if self.parallel_width == 0 {
            return invalid("parallel width must be positive");
        }
        Ok(())
    }
}

/// Per-row logistic regression: covariate rows, binomial counts `b` and
/// `kappa = n+ - b/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalDesign {
    dim: usize,
    rows: Vec<f64>,
    counts: Vec<u64>,
    kappa: Vec<f64>,
}

impl ConditionalDesign {
    /// Scans all pairs; [`run_chain`] uses a prebuilt index instead.
    pub fn from_stats(stats: &PairStats, theta: &EmbeddingState, w: usize, side: Side) -> Self {
        let mut design = Self::with_dim(theta.dim());
        for e in stats.entries() {
            match side {
                Side::Target if e.w == w => design.push(theta.alpha_row(e.v), e.n_pos, e.n_neg),
                Side::Context if e.v == w => design.push(theta.rho_row(e.w), e.n_pos, e.n_neg),
                _ => {}
            }
        }
        design
    }

    fn with_dim(dim: usize) -> Self {
        Self { dim, rows: Vec::new(), counts: Vec::new(), kappa: Vec::new() }
    }

    fn push(&mut self, row: &[f64], n_pos: u64, n_neg: u64) {
        let b = n_pos + n_neg;
        self.rows.extend_from_slice(row);
        self.counts.push(b);
        self.kappa.push(n_pos as f64 - 0.5 * b as f64);
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.dim..(j + 1) * self.dim]
    }
}

/// Run `steps` Polya-Gamma data-augmentation steps for one row, starting at `beta`.
pub fn sample_conditional<R: Rng + ?Sized>(
    design: &ConditionalDesign,
    prior: &PriorSpec,
    steps: usize,
    mut beta: Vec<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let k = design.dim;
    let lambda = prior.lambda();
    let mut rhs0 = vec![0.0; k];
    for j in 0..design.len() {
        let row = design.row(j);
        for i in 0..k {
            rhs0[i] += design.kappa[j] * row[i];
        }
    }
    let mut prec = vec![0.0; k * k];
    for _ in 0..steps {
        prec.fill(0.0);
        for i in 0..k {
            prec[i * k + i] = lambda;
        }
        for j in 0..design.len() {
            let row = design.row(j);
            let omega = sample_pg(design.counts[j], dot(row, &beta), rng);
            for r in 0..k {
                let s = omega * row[r];
                for c in 0..=r {
                    prec[r * k + c] += s * row[c];
                }
            }
        }
        let l = cholesky_with_jitter(&prec, k, JITTER).ok_or_else(|| {
            Error::Numerical("conditional precision is not positive definite".into())
        })?;
        // mean = P^-1 rhs; draw = mean + L^-T z
        let mut mean = rhs0.clone();
        solve_lower(&l, k, &mut mean);
        solve_upper_t(&l, k, &mut mean);
        let mut noise: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        solve_upper_t(&l, k, &mut noise);
        for i in 0..k {
            beta[i] = mean[i] + noise[i];
        }
    }
    Ok(beta)
}

fn initial_beta<R: Rng + ?Sized>(current: &[f64], warm: bool, rng: &mut R) -> Vec<f64> {
    if warm {
        current.to_vec()
    } else {
        let sd = 1.0 / (current.len() as f64).sqrt();
        (0..current.len()).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Draw a new value for row `w` of `side` from its full conditional.
pub fn conditional_update<R: Rng + ?Sized>(
    w: usize,
    side: Side,
    theta: &EmbeddingState,
    stats: &PairStats,
    prior: &PriorSpec,
    cfg: &GibbsConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if w >= theta.vocab_size() || stats.vocab_size() != theta.vocab_size() {
        return invalid("word id or statistics do not match the embedding");
    }
    let design = ConditionalDesign::from_stats(stats, theta, w, side);
    let beta = initial_beta(theta.row(side, w), cfg.warm_start_inner, rng);
    sample_conditional(&design, prior, cfg.inner_steps, beta, rng)
}

/// Compressed adjacency of the pair statistics in both directions.
struct PairIndex {
    by_target: Adjacency,
    by_context: Adjacency,
}

struct Adjacency {
    offsets: Vec<usize>,
    partner: Vec<usize>,
    n_pos: Vec<u64>,
    n_neg: Vec<u64>,
}

impl Adjacency {
    fn build(v: usize, stats: &PairStats, key: impl Fn(usize, usize) -> (usize, usize)) -> Self {
        let mut deg = vec![0usize; v + 1];
        for e in stats.entries() {
            deg[key(e.w, e.v).0 + 1] += 1;
        }
        for i in 0..v {
            deg[i + 1] += deg[i];
        }
        let offsets = deg.clone();
        let n = stats.num_unique();
        let (mut partner, mut n_pos, mut n_neg) = (vec![0; n], vec![0; n], vec![0; n]);
        let mut fill = deg;
        for e in stats.entries() {
            let (row, other) = key(e.w, e.v);
            let at = fill[row];
            fill[row] += 1;
            partner[at] = other;
            n_pos[at] = e.n_pos;
            n_neg[at] = e.n_neg;
        }
        Self { offsets, partner, n_pos, n_neg }
    }
}

impl PairIndex {
    fn new(stats: &PairStats) -> Self {
        let v = stats.vocab_size();
        Self {
            by_target: Adjacency::build(v, stats, |w, c| (w, c)),
            by_context: Adjacency::build(v, stats, |w, c| (c, w)),
        }
    }

    fn design(&self, theta: &EmbeddingState, w: usize, side: Side) -> ConditionalDesign {
        let adj = match side {
            Side::Target => &self.by_target,
            Side::Context => &self.by_context,
        };
        let mut design = ConditionalDesign::with_dim(theta.dim());
        for at in adj.offsets[w]..adj.offsets[w + 1] {
            let other = adj.partner[at];
            let row = match side {
                Side::Target => theta.alpha_row(other),
                Side::Context => theta.rho_row(other),
            };
            design.push(row, adj.n_pos[at], adj.n_neg[at]);
        }
        design
    }
}

fn row_rng(seed: u64, iteration: usize, side: Side, w: usize) -> StreamRng {
    stream(seed, &[TAG_GIBBS, iteration as u64, side.tag(), w as u64])
}

/// `N(0, 1/K)` starting point with the constraint rows (if any) set to `M`.
pub fn random_init(
    vocab_size: usize,
    dim: usize,
    seed: u64,
    constraint: Option<&IdentificationConstraint>,
) -> Result<EmbeddingState> {
    let mut rng = stream(seed, &[TAG_INIT]);
    let sd = 1.0 / (dim as f64).sqrt();
    let n = vocab_size * dim;
    let mut draw = |_| sd * rng.sample::<f64, _>(StandardNormal);
    let rho = (0..n).map(&mut draw).collect();
    let alpha = (0..n).map(&mut draw).collect();
    let mut theta = EmbeddingState::new(vocab_size, dim, rho, alpha)?;
    if let Some(c) = constraint {
        c.check_compatible(&theta)?;
        c.apply(&mut theta);
    }
    Ok(theta)
}

/// Blocked Gibbs sampler: each outer iteration redraws every target row given
/// the context matrix, then every unconstrained context row given the targets.
///
/// Row updates within a half-sweep are conditionally independent and run in
/// parallel; each row draws from its own stream keyed by
/// `(seed, iteration, side, word)`, so the chain does not depend on
/// `parallel_width`.
pub fn run_chain(
    stats: &PairStats,
    prior: &PriorSpec,
    cfg: &GibbsConfig,
    init: &EmbeddingState,
    constraint: Option<&IdentificationConstraint>,
) -> Result<PosteriorDraws> {
    cfg.validate()?;
    if stats.vocab_size() != init.vocab_size() {
        return invalid(format!(
            "statistics have V={} but the initial state has V={}",
            stats.vocab_size(),
            init.vocab_size()
        ));
    }
    init.check_finite()?;
    if let Some(c) = constraint {
        c.check_compatible(init)?;
        if !c.is_satisfied_by(init) {
            return invalid("initial state does not satisfy the identification constraint");
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel_width)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let index = PairIndex::new(stats);
    let v = init.vocab_size();
    let context_rows: Vec<usize> = (0..v).filter(|&w| !constraint.is_some_and(|c| c.contains(w))).collect();
    let target_rows: Vec<usize> = (0..v).collect();

    let mut theta = init.clone();
    let mut draws = Vec::with_capacity(cfg.outer_iterations - cfg.burn_in);
    for it in 1..=cfg.outer_iterations {
        for (side, rows) in [(Side::Target, &target_rows), (Side::Context, &context_rows)] {
            let updated: Vec<Vec<f64>> = pool.install(|| {
                rows.par_iter()
                    .map(|&w| {
                        let mut rng = row_rng(cfg.seed, it, side, w);
                        let design = index.design(&theta, w, side);
                        let beta = initial_beta(theta.row(side, w), cfg.warm_start_inner, &mut rng);
                        sample_conditional(&design, prior, cfg.inner_steps, beta, &mut rng)
                    })
                    .collect::<Result<_>>()
            })?;
            for (&w, row) in rows.iter().zip(updated) {
                theta.row_mut(side, w).copy_from_slice(&row);
            }
        }
        if it > cfg.burn_in {
            draws.push(theta.clone());
        }
        if it % 100 == 0 {
            log::debug!("gibbs iteration {it}/{}", cfg.outer_iterations);
        }
    }
    PosteriorDraws::new(draws, cfg.burn_in, cfg.seed, constraint.cloned())
}
