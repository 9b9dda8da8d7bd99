use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::model::{dot, sigmoid, EmbeddingState, IdentificationConstraint, PairStats, PriorSpec};

/// Maps between an [`EmbeddingState`] and the flat vector of free coordinates:
/// all of `rho` first, then every `alpha` row not fixed by the constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayout {
    vocab_size: usize,
    dim: usize,
    alpha_slot: Vec<Option<usize>>,
    free_alpha: Vec<usize>,
}

impl ParamLayout {
    pub fn new(vocab_size: usize, dim: usize, constraint: Option<&IdentificationConstraint>) -> Self {
        let free_alpha: Vec<usize> =
            (0..vocab_size).filter(|&w| !constraint.is_some_and(|c| c.contains(w))).collect();
        let mut alpha_slot = vec![None; vocab_size];
        for (i, &w) in free_alpha.iter().enumerate() {
            alpha_slot[w] = Some(vocab_size + i);
        }
        Self { vocab_size, dim, alpha_slot, free_alpha }
    }

    pub fn len(&self) -> usize {
        (self.vocab_size + self.free_alpha.len()) * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Offset of the first coordinate of `rho_w`.
    pub fn rho_offset(&self, w: usize) -> usize {
        w * self.dim
    }

    /// Offset of `alpha_w`, or `None` when the row is fixed.
    pub fn alpha_offset(&self, w: usize) -> Option<usize> {
        self.alpha_slot[w].map(|s| s * self.dim)
    }

    pub fn gather(&self, theta: &EmbeddingState) -> Vec<f64> {
        self.gather_parts(theta.rho(), theta.alpha())
    }

    /// Like [`gather`](Self::gather) for raw row-major `V x K` matrices.
    pub fn gather_parts(&self, rho: &[f64], alpha: &[f64]) -> Vec<f64> {
        let k = self.dim;
        let mut x = rho.to_vec();
        for &w in &self.free_alpha {
            x.extend_from_slice(&alpha[w * k..(w + 1) * k]);
        }
        x
    }

    /// Overwrite the free coordinates of `theta` with `x`.
    pub fn scatter(&self, x: &[f64], theta: &mut EmbeddingState) {
        let k = self.dim;
        theta.rho_mut().copy_from_slice(&x[..self.vocab_size * k]);
        for (i, &w) in self.free_alpha.iter().enumerate() {
            let at = (self.vocab_size + i) * k;
            theta.alpha_row_mut(w).copy_from_slice(&x[at..at + k]);
        }
    }
}

/// One `K x K` cross block, `d^2 / d rho_w d alpha_v^T` (row-major, rows index `rho_w`).
#[derive(Clone, Debug, PartialEq)]
pub struct CrossBlock {
    pub w: usize,
    pub v: usize,
    pub block: Vec<f64>,
}

/// Block-sparse Hessian of the log posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianBlocks {
    pub vocab_size: usize,
    pub dim: usize,
    /// `V` row-major `K x K` blocks, concatenated.
    pub diag_rho: Vec<f64>,
    pub diag_alpha: Vec<f64>,
    /// One entry per observed pair, in the order of the statistics.
    pub cross: Vec<CrossBlock>,
}

pub fn assemble_hessian(stats: &PairStats, theta: &EmbeddingState, prior: &PriorSpec) -> Result<HessianBlocks> {
    if stats.vocab_size() != theta.vocab_size() {
        return invalid("pair statistics and embedding disagree on V");
    }
    theta.check_finite()?;
    let (v_size, k) = (theta.vocab_size(), theta.dim());
    let kk = k * k;
    let mut diag_rho = vec![0.0; v_size * kk];
    let mut diag_alpha = vec![0.0; v_size * kk];
    for w in 0..v_size {
        for i in 0..k {
            diag_rho[w * kk + i * k + i] = -prior.lambda();
            diag_alpha[w * kk + i * k + i] = -prior.lambda();
        }
    }
    let mut cross = Vec::with_capacity(stats.num_unique());
    for e in stats.entries() {
        let (r, a) = (theta.rho_row(e.w), theta.alpha_row(e.v));
        let s = sigmoid(dot(r, a));
        let b = e.total() as f64;
        let curv = -b * s * (1.0 - s);
        let g = e.n_pos as f64 - b * s;
        let dr = &mut diag_rho[e.w * kk..(e.w + 1) * kk];
        let da = &mut diag_alpha[e.v * kk..(e.v + 1) * kk];
        let mut block = vec![0.0; kk];
        for i in 0..k {
            for j in 0..k {
                dr[i * k + j] += curv * a[i] * a[j];
                da[i * k + j] += curv * r[i] * r[j];
                block[i * k + j] = curv * a[i] * r[j];
            }
            block[i * k + i] += g;
        }
        cross.push(CrossBlock { w: e.w, v: e.v, block });
    }
    Ok(HessianBlocks { vocab_size: v_size, dim: k, diag_rho, diag_alpha, cross })
}

impl HessianBlocks {
    fn rho_block(&self, w: usize) -> &[f64] {
        let kk = self.dim * self.dim;
        &self.diag_rho[w * kk..(w + 1) * kk]
    }

    fn alpha_block(&self, w: usize) -> &[f64] {
        let kk = self.dim * self.dim;
        &self.diag_alpha[w * kk..(w + 1) * kk]
    }

    /// Dense Hessian over all `2VK` coordinates, `rho` before `alpha`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_dense_free(&ParamLayout::new(self.vocab_size, self.dim, None))
    }

    /// Dense Hessian restricted to the free coordinates of `layout`.
    pub fn to_dense_free(&self, layout: &ParamLayout) -> DMatrix<f64> {
        let k = self.dim;
        let n = layout.len();
        let mut h = DMatrix::zeros(n, n);
        let mut put = |r0: usize, c0: usize, block: &[f64], transpose: bool| {
            for i in 0..k {
                for j in 0..k {
                    let x = if transpose { block[j * k + i] } else { block[i * k + j] };
                    h[(r0 + i, c0 + j)] += x;
                }
            }
        };
        for w in 0..self.vocab_size {
            let o = layout.rho_offset(w);
            put(o, o, self.rho_block(w), false);
            if let Some(o) = layout.alpha_offset(w) {
                put(o, o, self.alpha_block(w), false);
            }
        }
        for c in &self.cross {
            if let Some(ao) = layout.alpha_offset(c.v) {
                let ro = layout.rho_offset(c.w);
                put(ro, ao, &c.block, false);
                put(ao, ro, &c.block, true);
            }
        }
        h
    }

    /// `y = -H x` on the free coordinates of `layout`.
    pub(crate) fn neg_mul(&self, layout: &ParamLayout, x: &[f64]) -> Vec<f64> {
        let k = self.dim;
        let mut y = vec![0.0; x.len()];
        let acc = |out: usize, inp: usize, block: &[f64], transpose: bool, y: &mut [f64]| {
            for i in 0..k {
                let mut s = 0.0;
                for j in 0..k {
                    let b = if transpose { block[j * k + i] } else { block[i * k + j] };
                    s += b * x[inp + j];
                }
                y[out + i] -= s;
            }
        };
        for w in 0..self.vocab_size {
            let o = layout.rho_offset(w);
            acc(o, o, self.rho_block(w), false, &mut y);
            if let Some(o) = layout.alpha_offset(w) {
                acc(o, o, self.alpha_block(w), false, &mut y);
            }
        }
        for c in &self.cross {
            if let Some(ao) = layout.alpha_offset(c.v) {
                let ro = layout.rho_offset(c.w);
                acc(ro, ao, &c.block, false, &mut y);
                acc(ao, ro, &c.block, true, &mut y);
            }
        }
        y
    }

    /// Diagonal blocks of `-H` on the free coordinates, in layout order.
    pub(crate) fn neg_diag_blocks(&self, layout: &ParamLayout) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = (0..self.vocab_size)
            .map(|w| self.rho_block(w).iter().map(|x| -x).collect())
            .collect();
        for w in 0..self.vocab_size {
            if layout.alpha_offset(w).is_some() {
                out.push(self.alpha_block(w).iter().map(|x| -x).collect());
            }
        }
        out
    }
}
