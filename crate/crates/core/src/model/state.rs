use crate::error::{invalid, Result};

/// Which of the two embedding matrices a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Target,
    Context,
}

impl Side {
    pub(crate) fn tag(self) -> u64 {
        match self {
            Side::Target => 0,
            Side::Context => 1,
        }
    }
}

/// Target (`rho`) and context (`alpha`) embedding matrices, both `V x K`,
/// stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingState {
    vocab_size: usize,
    dim: usize,
    rho: Vec<f64>,
    alpha: Vec<f64>,
}

impl EmbeddingState {
    pub fn new(vocab_size: usize, dim: usize, rho: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if vocab_size == 0 || dim == 0 {
            return invalid("vocabulary size and dimension must be positive");
        }
        let n = vocab_size * dim;
        if rho.len() != n || alpha.len() != n {
            return invalid(format!(
                "expected {n} entries per matrix for V={vocab_size}, K={dim}; got rho={} alpha={}",
                rho.len(),
                alpha.len()
            ));
        }
        let state = Self { vocab_size, dim, rho, alpha };
        state.check_finite()?;
        Ok(state)
    }

    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        assert!(vocab_size > 0 && dim > 0, "V and K must be positive");
        let n = vocab_size * dim;
        Self { vocab_size, dim, rho: vec![0.0; n], alpha: vec![0.0; n] }
    }

    /// Build from nested rows, `rho[w][k]` and `alpha[w][k]`.
    pub fn from_rows(rho: &[Vec<f64>], alpha: &[Vec<f64>]) -> Result<Self> {
        if rho.is_empty() || rho.len() != alpha.len() {
            return invalid("rho and alpha must have the same nonzero number of rows");
        }
        let dim = rho[0].len();
        if rho.iter().chain(alpha.iter()).any(|r| r.len() != dim) {
            return invalid("all rows must have the same length");
        }
        Self::new(rho.len(), dim, rho.concat(), alpha.concat())
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn rho_mut(&mut self) -> &mut [f64] {
        &mut self.rho
    }

    pub fn alpha_mut(&mut self) -> &mut [f64] {
        &mut self.alpha
    }

    pub fn rho_row(&self, w: usize) -> &[f64] {
        &self.rho[w * self.dim..(w + 1) * self.dim]
    }

    pub fn alpha_row(&self, w: usize) -> &[f64] {
        &self.alpha[w * self.dim..(w + 1) * self.dim]
    }

    pub fn rho_row_mut(&mut self, w: usize) -> &mut [f64] {
        &mut self.rho[w * self.dim..(w + 1) * self.dim]
    }

    pub fn alpha_row_mut(&mut self, w: usize) -> &mut [f64] {
        &mut self.alpha[w * self.dim..(w + 1) * self.dim]
    }

    pub fn row(&self, side: Side, w: usize) -> &[f64] {
        match side {
            Side::Target => self.rho_row(w),
            Side::Context => self.alpha_row(w),
        }
    }

    pub fn row_mut(&mut self, side: Side, w: usize) -> &mut [f64] {
        match side {
            Side::Target => self.rho_row_mut(w),
            Side::Context => self.alpha_row_mut(w),
        }
    }

    /// `rho_w . alpha_v`
    #[inline]
    pub fn dot(&self, w: usize, v: usize) -> f64 {
        dot(self.rho_row(w), self.alpha_row(v))
    }

    pub fn rho_rows(&self) -> Vec<Vec<f64>> {
        self.rho.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn alpha_rows(&self) -> Vec<Vec<f64>> {
        self.alpha.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            vocab_size: self.vocab_size,
            dim: self.dim,
            rho: self.rho.iter().map(|x| -x).collect(),
            alpha: self.alpha.iter().map(|x| -x).collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.vocab_size == other.vocab_size && self.dim == other.dim
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.rho.iter().chain(self.alpha.iter()).all(|x| x.is_finite()) {
            Ok(())
        } else {
            invalid("embedding contains non-finite entries")
        }
    }

    /// Largest absolute entrywise difference to `other` (same shape assumed).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rho
            .iter()
            .zip(&other.rho)
            .chain(self.alpha.iter().zip(&other.alpha))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
