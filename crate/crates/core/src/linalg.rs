//! Small dense helpers for `K x K` systems in the sampler hot loop.
//! Matrices are row-major; only the lower triangle is referenced.

/// In-place Cholesky `A = L L^T`. Returns `false` if `A` is not numerically
/// positive definite.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for p in 0..j {
            d -= a[j * n + p] * a[j * n + p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= a[i * n + p] * a[j * n + p];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Cholesky with one retry after adding `jitter * I`.
pub(crate) fn cholesky_with_jitter(a: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    if cholesky_in_place(&mut l, n) {
        return Some(l);
    }
    let mut l = a.to_vec();
    for i in 0..n {
        l[i * n + i] += jitter;
    }
    cholesky_in_place(&mut l, n).then_some(l)
}

/// Solve `L x = b` in place.
pub(crate) fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * n + p] * b[p];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve `L^T x = b` in place.
pub(crate) fn solve_upper_t(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in i + 1..n {
            s -= l[p * n + i] * b[p];
        }
        b[i] = s / l[i * n + i];
    }
}

/// `y = L x` for lower-triangular `L`.
pub(crate) fn mul_lower(l: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..=i).map(|p| l[i * n + p] * x[p]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let mut l = a.to_vec();
        assert!(cholesky_in_place(&mut l, 3));
        let mut x = vec![1.0, -2.0, 0.5];
        let b = x.clone();
        solve_lower(&l, 3, &mut x);
        solve_upper_t(&l, 3, &mut x);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
        let lx = mul_lower(&l, 3, &[1.0, 0.0, 0.0]);
        assert!((lx[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_fails_even_with_jitter() {
        assert!(cholesky_with_jitter(&[1.0, 2.0, 2.0, 1.0], 2, 1e-10).is_none());
        assert!(cholesky_with_jitter(&[1.0, 0.0, 0.0, 0.0], 2, 1e-10).is_some());
    }
}
