use std::collections::HashMap;

use nalgebra::DMatrix;

use super::EmbeddingState;
use crate::error::{invalid, Error, Result};

/// Condition numbers above this make `alpha_I` count as singular.
pub const MAX_CONDITION: f64 = 1e8;

/// Fixes the context rows `alpha_I` to an invertible `K x K` matrix `M`,
/// removing the `GL(K)` symmetry of the likelihood.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentificationConstraint {
    indices: Vec<usize>,
    matrix: Vec<f64>,
    position: HashMap<usize, usize>,
}

impl IdentificationConstraint {
    /// `matrix` is row-major `K x K`; row `i` is the fixed value of `alpha_{indices[i]}`.
    pub fn new(indices: Vec<usize>, matrix: Vec<f64>) -> Result<Self> {
        let k = indices.len();
        if k == 0 {
            return invalid("constraint needs at least one index");
        }
        if matrix.len() != k * k {
            return invalid(format!("constraint matrix must be {k}x{k}"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return invalid("constraint matrix must be finite");
        }
        let mut position = HashMap::with_capacity(k);
        for (i, &w) in indices.iter().enumerate() {
            if position.insert(w, i).is_some() {
                return invalid(format!("duplicate constraint index {w}"));
            }
        }
        let cond = condition_number(&DMatrix::from_row_slice(k, k, &matrix));
        if !(cond <= MAX_CONDITION) {
            return Err(Error::DegenerateConstraint(format!(
                "constraint matrix condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}"
            )));
        }
        Ok(Self { indices, matrix, position })
    }

    /// Fix the given context rows at their current values in `theta`.
    pub fn from_state(theta: &EmbeddingState, indices: Vec<usize>) -> Result<Self> {
        if indices.len() != theta.dim() {
            return invalid(format!(
                "constraint needs exactly K={} indices, got {}",
                theta.dim(),
                indices.len()
            ));
        }
        if let Some(&w) = indices.iter().find(|&&w| w >= theta.vocab_size()) {
            return invalid(format!("constraint index {w} out of range"));
        }
        let matrix = indices.iter().flat_map(|&w| theta.alpha_row(w).to_vec()).collect();
        Self::new(indices, matrix)
    }

    /// The last `K` context rows of `theta`, fixed at their current values.
    pub fn last_k(theta: &EmbeddingState) -> Result<Self> {
        let (v, k) = (theta.vocab_size(), theta.dim());
        if k > v {
            return invalid(format!("K={k} exceeds V={v}"));
        }
        Self::from_state(theta, (v - k..v).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Row-major `K x K`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn matrix_row(&self, i: usize) -> &[f64] {
        let k = self.dim();
        &self.matrix[i * k..(i + 1) * k]
    }

    pub fn matrix_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.dim()).map(<[f64]>::to_vec).collect()
    }

    /// Position of `w` inside `I`, if constrained.
    pub fn position(&self, w: usize) -> Option<usize> {
        self.position.get(&w).copied()
    }

    pub fn contains(&self, w: usize) -> bool {
        self.position.contains_key(&w)
    }

    pub fn check_compatible(&self, theta: &EmbeddingState) -> Result<()> {
        if self.dim() != theta.dim() {
            return invalid(format!(
                "constraint has K={} but embedding has K={}",
                self.dim(),
                theta.dim()
            ));
        }
        if let Some(&w) = self.indices.iter().find(|&&w| w >= theta.vocab_size()) {
            return invalid(format!("constraint index {w} out of range"));
        }
        Ok(())
    }

    /// Exact equality of `alpha_I` and `M`.
    pub fn is_satisfied_by(&self, theta: &EmbeddingState) -> bool {
        self.check_compatible(theta).is_ok()
            && self
                .indices
                .iter()
                .enumerate()
                .all(|(i, &w)| theta.alpha_row(w) == self.matrix_row(i))
    }

    /// Overwrite `alpha_I` with `M`.
    pub fn apply(&self, theta: &mut EmbeddingState) {
        for (i, &w) in self.indices.iter().enumerate() {
            theta.alpha_row_mut(w).copy_from_slice(self.matrix_row(i));
        }
    }
}

/// Two-norm condition number; infinite for singular input.
pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}
