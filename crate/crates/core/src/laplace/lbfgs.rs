//! Limited-memory BFGS minimizer with backtracking Armijo line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_sup: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimize `f`, which returns the objective and its gradient. A non-finite
/// objective makes the line search halve the step.
pub(crate) fn minimize<F>(
    mut f: F,
    mut x: Vec<f64>,
    max_iterations: usize,
    tolerance: f64,
    history: usize,
) -> Result<Outcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(history);
    let mut iterations = 0;
    while iterations < max_iterations {
        if sup(&g) < tolerance {
            return Ok(Outcome { x, value: fx, grad_sup: sup(&g), iterations, converged: true });
        }
        iterations += 1;

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut coef = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            coef.push(a);
        }
        let gamma = match pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / dot(&g, &g).sqrt().max(1.0),
        };
        d.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in pairs.iter().zip(coef.into_iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v / dot(&g, &g).sqrt().max(1.0)).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        let mut saw_non_finite = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) {
                // slack for round-off once the objective has flattened out
                let slack = 1e-14 * fx.abs();
                if ft <= fx + ARMIJO * step * slope + slack {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            } else {
                saw_non_finite = true;
            }
            step *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else {
            if saw_non_finite {
                return Err(Error::Numerical(format!(
                    "objective not finite after {MAX_HALVINGS} step halvings"
                )));
            }
            // no further decrease representable
            return Ok(Outcome { x, value: fx, grad_sup: sup(&g), iterations, converged: false });
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if pairs.len() == history {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fxn;
        g = gn;
    }
    let grad_sup = sup(&g);
    Ok(Outcome { x, value: fx, grad_sup, iterations, converged: grad_sup < tolerance })
}
