#![allow(dead_code)]

use pgembed::model::{grad_log_posterior, log_posterior, PairCount};
use pgembed::rng::stream;
use pgembed::{EmbeddingState, IdentificationConstraint, PairStats, PriorSpec};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn normals(n: usize, sd: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn random_state(v: usize, k: usize, sd: f64, rng: &mut impl Rng) -> EmbeddingState {
    EmbeddingState::new(v, k, normals(v * k, sd, rng), normals(v * k, sd, rng)).unwrap()
}

/// Roughly `density` of all pairs observed with small counts.
pub fn random_stats(v: usize, density: f64, max_count: u64, rng: &mut impl Rng) -> PairStats {
    let mut entries = Vec::new();
    for w in 0..v {
        for c in 0..v {
            if rng.random::<f64>() < density {
                let n_pos = rng.random_range(0..=max_count);
                let n_neg = rng.random_range(0..=max_count);
                if n_pos + n_neg > 0 {
                    entries.push(PairCount { w, v: c, n_pos, n_neg });
                }
            }
        }
    }
    PairStats::new(v, 0, entries).unwrap()
}

/// Flattened `[rho, alpha]` view of a state.
pub fn flatten(theta: &EmbeddingState) -> Vec<f64> {
    theta.rho().iter().chain(theta.alpha()).copied().collect()
}

pub fn unflatten(x: &[f64], v: usize, k: usize) -> EmbeddingState {
    EmbeddingState::new(v, k, x[..v * k].to_vec(), x[v * k..].to_vec()).unwrap()
}

/// Central finite differences of the log posterior.
pub fn fd_gradient(stats: &PairStats, theta: &EmbeddingState, prior: &PriorSpec, h: f64) -> Vec<f64> {
    let (v, k) = (theta.vocab_size(), theta.dim());
    let x = flatten(theta);
    (0..x.len())
        .map(|i| {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let f = |y: &[f64]| log_posterior(stats, &unflatten(y, v, k), prior, None).unwrap();
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

pub fn analytic_gradient(stats: &PairStats, theta: &EmbeddingState, prior: &PriorSpec) -> Vec<f64> {
    let g = grad_log_posterior(stats, theta, prior, None).unwrap();
    g.rho.into_iter().chain(g.alpha).collect()
}

/// Central differences of the analytic gradient; row `i` is `d grad / d x_i`.
pub fn fd_hessian(stats: &PairStats, theta: &EmbeddingState, prior: &PriorSpec, h: f64) -> Vec<Vec<f64>> {
    let (v, k) = (theta.vocab_size(), theta.dim());
    let x = flatten(theta);
    (0..x.len())
        .map(|i| {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let gu = analytic_gradient(stats, &unflatten(&up, v, k), prior);
            let gd = analytic_gradient(stats, &unflatten(&dn, v, k), prior);
            gu.iter().zip(&gd).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Mean and variance of `PG(b, c)` from the sum-of-gammas series
/// `PG = (1 / 2 pi^2) sum_k g_k / ((k - 1/2)^2 + c^2 / (4 pi^2))`, truncated.
pub fn pg_series_moments(b: f64, c: f64, terms: usize) -> (f64, f64) {
    let pi2 = std::f64::consts::PI.powi(2);
    let (mut m, mut v) = (0.0, 0.0);
    for k in 1..=terms {
        let d = (k as f64 - 0.5).powi(2) + c * c / (4.0 * pi2);
        m += 1.0 / d;
        v += 1.0 / (d * d);
    }
    (b * m / (2.0 * pi2), b * v / (4.0 * pi2 * pi2))
}

/// A well-conditioned `K x K` constraint on `k` distinct random rows.
pub fn random_constraint(v: usize, k: usize, rng: &mut impl Rng) -> IdentificationConstraint {
    let mut ids: Vec<usize> = (0..v).collect();
    for i in 0..k {
        let j = rng.random_range(i..v);
        ids.swap(i, j);
    }
    ids.truncate(k);
    loop {
        let mut m = normals(k * k, 1.0, rng);
        for i in 0..k {
            m[i * k + i] += 2.0;
        }
        if let Ok(c) = IdentificationConstraint::new(ids.clone(), m) {
            return c;
        }
    }
}

pub fn seeded(seed: u64) -> pgembed::rng::StreamRng {
    stream(seed, &[0x7e57])
}

/// Two-sample-free KS statistic of `sample` against a CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// CDF of a density known on an equally spaced grid (trapezoid rule,
/// linear interpolation between nodes).
pub struct GridCdf {
    lo: f64,
    step: f64,
    cum: Vec<f64>,
}

impl GridCdf {
    pub fn new(lo: f64, hi: f64, n: usize, density: impl Fn(f64) -> f64) -> Self {
        let step = (hi - lo) / (n - 1) as f64;
        let dens: Vec<f64> = (0..n).map(|i| density(lo + i as f64 * step)).collect();
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + 0.5 * step * (dens[i] + dens[i - 1]);
        }
        let z = cum[n - 1];
        cum.iter_mut().for_each(|c| *c /= z);
        Self { lo, step, cum }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.lo) / self.step;
        if t <= 0.0 {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i + 1 >= self.cum.len() {
            return 1.0;
        }
        self.cum[i] + (t - i as f64) * (self.cum[i + 1] - self.cum[i])
    }
}
