use nalgebra::DMatrix;

use super::constraint::{condition_number, MAX_CONDITION};
use super::{EmbeddingState, IdentificationConstraint};
use crate::error::{Error, Result};

/// Map `theta` onto the equivalent embedding with `alpha_I = M`.
///
/// With `A = alpha_I^-1 M`, every context row becomes `alpha_w A` and every
/// target row `rho_w A^-T`, so all dot products `rho_w . alpha_v` are unchanged.
/// The constrained rows are then written as `M` verbatim.
pub fn canonicalize(
    theta: &EmbeddingState,
    constraint: &IdentificationConstraint,
) -> Result<EmbeddingState> {
    constraint.check_compatible(theta)?;
    let k = theta.dim();
    let alpha_i = DMatrix::from_row_iterator(
        k,
        k,
        constraint.indices().iter().flat_map(|&w| theta.alpha_row(w).iter().copied()),
    );
    let cond = condition_number(&alpha_i);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateConstraint(format!(
            "alpha_I has condition number {cond:.3e}"
        )));
    }
    let m = DMatrix::from_row_slice(k, k, constraint.matrix());
    let alpha_i_inv = alpha_i
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConstraint("alpha_I is singular".into()))?;
    let a = &alpha_i_inv * &m;
    let a_inv_t = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConstraint("transform is singular".into()))?
        .transpose();

    let n = theta.vocab_size();
    let rho = DMatrix::from_row_slice(n, k, theta.rho()) * a_inv_t;
    let alpha = DMatrix::from_row_slice(n, k, theta.alpha()) * a;
    let mut out = EmbeddingState::new(n, k, row_major(&rho), row_major(&alpha))?;
    constraint.apply(&mut out);
    Ok(out)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_likelihood;
    use crate::model::PairCount;
    use crate::model::PairStats;

    fn state() -> EmbeddingState {
        EmbeddingState::new(
            3,
            2,
            vec![0.3, -1.2, 0.5, 0.8, -0.7, 0.1],
            vec![1.1, 0.2, -0.4, 0.9, 0.6, -0.3],
        )
        .unwrap()
    }

    #[test]
    fn identity_when_already_canonical() {
        let theta = state();
        let c = IdentificationConstraint::last_k(&theta).unwrap();
        let out = canonicalize(&theta, &c).unwrap();
        assert!(out.max_abs_diff(&theta) < 1e-12);
    }

    #[test]
    fn preserves_likelihood_and_fixes_rows() {
        let theta = state();
        let c = IdentificationConstraint::new(vec![0, 2], vec![2.0, 0.5, -1.0, 1.5]).unwrap();
        let out = canonicalize(&theta, &c).unwrap();
        assert!(c.is_satisfied_by(&out));
        let stats = PairStats::new(
            3,
            0,
            (0..3).flat_map(|w| (0..3).map(move |v| PairCount { w, v, n_pos: (w + v) as u64, n_neg: 1 })),
        )
        .unwrap();
        let a = log_likelihood(&stats, &theta).unwrap();
        let b = log_likelihood(&stats, &out).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn singular_alpha_i_is_rejected() {
        let theta = EmbeddingState::new(2, 2, vec![1.0; 4], vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let c = IdentificationConstraint::new(vec![0, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(canonicalize(&theta, &c), Err(Error::DegenerateConstraint(_))));
    }
}
