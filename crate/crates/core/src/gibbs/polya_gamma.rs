//! Polya-Gamma random variates.
//!
//! `PG(1, c)` is drawn exactly with an alternating-series rejection
//! sampler. `PG(b, c)` for integer `b` is the sum of `b` independent unit
//! draws, switching to a moment-matched Gaussian once `b` exceeds
//! [`GAUSSIAN_THRESHOLD`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::function::erf::erfc;

/// Counts above this use the Gaussian approximation.
pub const GAUSSIAN_THRESHOLD: u64 = 170;

const TRUNC: f64 = 0.64;
const TRUNC_RECIP: f64 = 1.0 / TRUNC;

/// Mean of `PG(b, c)`: `b / (2c) * tanh(c / 2)`.
pub fn pg_mean(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-6 {
        b * (0.25 - c * c / 48.0)
    } else {
        b * (0.5 * c).tanh() / (2.0 * c)
    }
}

/// Variance of `PG(b, c)`: `b (sinh c - c) sech^2(c/2) / (4 c^3)`.
pub fn pg_variance(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-3 {
        return b * (1.0 / 24.0 - c * c / 120.0);
    }
    // (sinh c - c) sech^2(c/2), rewritten in e^-c so it never overflows.
    let e = (-c).exp();
    let num = 2.0 * (1.0 - e * e - 2.0 * c * e) / ((1.0 + e) * (1.0 + e));
    b * num / (4.0 * c * c * c)
}

/// Exact `PG(b, c)` draw for `b >= 1` (Gaussian above the threshold).
pub fn sample_pg<R: Rng + ?Sized>(b: u64, c: f64, rng: &mut R) -> f64 {
    assert!(b >= 1, "Polya-Gamma shape must be at least 1");
    if b > GAUSSIAN_THRESHOLD {
        return sample_gaussian(b as f64, c, rng);
    }
    let tilt = Tilt::new(c);
    (0..b).map(|_| tilt.draw(rng)).sum()
}

/// Exact `PG(1, c)` draw.
pub fn sample_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    Tilt::new(c).draw(rng)
}

fn sample_gaussian<R: Rng + ?Sized>(b: f64, c: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let x = pg_mean(b, c) + pg_variance(b, c).sqrt() * z;
    x.max(f64::MIN_POSITIVE)
}

/// Constants of the proposal that depend only on the tilt, shared by
/// every unit draw of one `PG(b, c)` call.
struct Tilt {
    /// `|c| / 2`
    z: f64,
    fz: f64,
    /// Probability of proposing from the truncated exponential piece.
    p_exp: f64,
}

impl Tilt {
    fn new(c: f64) -> Self {
        let z = 0.5 * c.abs();
        let fz = 0.125 * PI * PI + 0.5 * z * z;
        Self { z, fz, p_exp: mass_texpon(z, fz) }
    }

    /// One draw of `J*(1, z) / 4 = PG(1, c)`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = if rng.random::<f64>() < self.p_exp {
                TRUNC + rng.sample::<f64, _>(Exp1) / self.fz
            } else {
                self.truncated_inverse_gaussian(rng)
            };
            let mut s = series_coef(0, x);
            let y = rng.random::<f64>() * s;
            let mut n = 0;
            loop {
                n += 1;
                if n % 2 == 1 {
                    s -= series_coef(n, x);
                    if y <= s {
                        return 0.25 * x;
                    }
                } else {
                    s += series_coef(n, x);
                    if y > s {
                        break;
                    }
                }
            }
        }
    }

    /// Inverse Gaussian `IG(1/z, 1)` truncated to `(0, TRUNC]`.
    fn truncated_inverse_gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z = self.z;
        if TRUNC_RECIP > z {
            // mean beyond the truncation point: proposal from a truncated 1/chi^2
            loop {
                let (mut e1, mut e2): (f64, f64) = (rng.sample(Exp1), rng.sample(Exp1));
                while e1 * e1 > 2.0 * e2 / TRUNC {
                    e1 = rng.sample(Exp1);
                    e2 = rng.sample(Exp1);
                }
                let d = 1.0 + e1 * TRUNC;
                let x = TRUNC / (d * d);
                if rng.random::<f64>() <= (-0.5 * z * z * x).exp() {
                    return x;
                }
            }
        } else {
            let mu = 1.0 / z;
            loop {
                let y: f64 = rng.sample(StandardNormal);
                let mu_y = mu * y * y;
                let half_mu = 0.5 * mu;
                let mut x = mu + half_mu * mu_y - half_mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
                if rng.random::<f64>() > mu / (mu + x) {
                    x = mu * mu / x;
                }
                if x <= TRUNC {
                    return x;
                }
            }
        }
    }
}

/// Mixture weight of the exponential piece of the proposal.
fn mass_texpon(z: f64, fz: f64) -> f64 {
    let t = TRUNC;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + log_norm_cdf(b);
    let xa = x0 + z + log_norm_cdf(a);
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

fn log_norm_cdf(x: f64) -> f64 {
    (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
}

/// Coefficient `a_n(x)` of the alternating series for the `J*(1)` density.
#[inline]
fn series_coef(n: u32, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        let h = n as f64 + 0.5;
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}
