use rand::Rng;
use rand_distr::StandardNormal;

use super::hessian::{assemble_hessian, HessianBlocks, ParamLayout};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_with_jitter, mul_lower, solve_lower, solve_upper_t};
use crate::model::{dot, sigmoid, EmbeddingState, IdentificationConstraint, PairStats, PriorSpec};
use crate::rng::{stream, TAG_LAPLACE};

const CG_TOLERANCE: f64 = 1e-13;
const JITTER: f64 = 1e-10;

/// Draws of one `(rho_w, alpha_v)` pair from its Laplace marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseDraws {
    pub w: usize,
    pub v: usize,
    pub rho: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    /// Row-major `2K x 2K` marginal covariance, `rho_w` coordinates first.
    /// Rows and columns of a constrained `alpha_v` are zero.
    pub covariance: Vec<f64>,
}

impl PairwiseDraws {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn co_probs(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.alpha).map(|(r, a)| sigmoid(dot(r, a))).collect()
    }
}

struct Preconditioner {
    dim: usize,
    factors: Vec<Vec<f64>>,
}

impl Preconditioner {
    fn new(blocks: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        let factors = blocks
            .into_iter()
            .map(|mut b| {
                if cholesky_in_place(&mut b, dim) {
                    Ok(b)
                } else {
                    Err(Error::Numerical("diagonal precision block is not positive definite".into()))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { dim, factors })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let k = self.dim;
        let mut z = r.to_vec();
        for (i, l) in self.factors.iter().enumerate() {
            let part = &mut z[i * k..(i + 1) * k];
            solve_lower(l, k, part);
            solve_upper_t(l, k, part);
        }
        z
    }
}

/// Preconditioned conjugate gradients for `-H x = e_j`.
fn solve_unit(h: &HessianBlocks, layout: &ParamLayout, pre: &Preconditioner, j: usize) -> Result<Vec<f64>> {
    let n = layout.len();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    r[j] = 1.0;
    let mut z = pre.apply(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..20 * n.max(10) {
        let q = h.neg_mul(layout, &p);
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if !(pq > 0.0) {
            return Err(Error::Numerical("precision is not positive definite".into()));
        }
        let step = rz / pq;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() < CG_TOLERANCE {
            return Ok(x);
        }
        z = pre.apply(&r);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numerical("conjugate gradients did not converge".into()))
}

/// Sample `(rho_w, alpha_v)` from the `2K`-dimensional marginal of the Laplace
/// approximation without forming the full covariance. Each needed column of
/// the covariance comes from one sparse linear solve. A constrained `alpha_v`
/// stays at its fixed value.
#[allow(clippy::too_many_arguments)]
pub fn laplace_pairwise_draws(
    stats: &PairStats,
    prior: &PriorSpec,
    theta_map: &EmbeddingState,
    constraint: Option<&IdentificationConstraint>,
    w: usize,
    v: usize,
    n: usize,
    seed: u64,
) -> Result<PairwiseDraws> {
    let (vs, k) = (theta_map.vocab_size(), theta_map.dim());
    if w >= vs || v >= vs {
        return invalid(format!("word id out of range for V={vs}"));
    }
    if n == 0 {
        return invalid("number of draws must be positive");
    }
    if let Some(c) = constraint {
        c.check_compatible(theta_map)?;
        if !c.is_satisfied_by(theta_map) {
            return invalid("MAP estimate does not satisfy the identification constraint");
        }
    }
    let layout = ParamLayout::new(vs, k, constraint);
    let h = assemble_hessian(stats, theta_map, prior)?;
    let pre = Preconditioner::new(h.neg_diag_blocks(&layout), k)?;

    let mut coords: Vec<Option<usize>> = (0..k).map(|i| Some(layout.rho_offset(w) + i)).collect();
    coords.extend((0..k).map(|i| layout.alpha_offset(v).map(|o| o + i)));
    let m = 2 * k;
    let mut cov = vec![0.0; m * m];
    for (a, ca) in coords.iter().enumerate() {
        let Some(ca) = *ca else { continue };
        let col = solve_unit(&h, &layout, &pre, ca)?;
        for (b, cb) in coords.iter().enumerate() {
            if let Some(cb) = *cb {
                cov[b * m + a] = col[cb];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            let s = 0.5 * (cov[a * m + b] + cov[b * m + a]);
            cov[a * m + b] = s;
            cov[b * m + a] = s;
        }
    }
    let free: Vec<usize> = (0..m).filter(|&a| coords[a].is_some()).collect();
    let f = free.len();
    let sub: Vec<f64> = free.iter().flat_map(|&a| free.iter().map(move |&b| (a, b))).map(|(a, b)| cov[a * m + b]).collect();
    let l = cholesky_with_jitter(&sub, f, JITTER)
        .ok_or_else(|| Error::Numerical("pairwise marginal covariance is not positive definite".into()))?;

    let mut rng = stream(seed, &[TAG_LAPLACE, w as u64, v as u64]);
    let center: Vec<f64> = theta_map.rho_row(w).iter().chain(theta_map.alpha_row(v)).copied().collect();
    let (mut rho, mut alpha) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let z: Vec<f64> = (0..f).map(|_| rng.sample(StandardNormal)).collect();
        let offset = mul_lower(&l, f, &z);
        let mut x = center.clone();
        for (i, &a) in free.iter().enumerate() {
            x[a] += offset[i];
        }
        alpha.push(x.split_off(k));
        rho.push(x);
    }
    Ok(PairwiseDraws { w, v, rho, alpha, covariance: cov })
}
