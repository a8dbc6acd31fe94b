use crate::error::{Error, Result};

const MAX_ITER: usize = 400;
const NEWTON_ITER: usize = 60;

/// Solves `cdf(x) = p` for a continuous, nondecreasing `cdf` on `[lo, hi]`
/// using Newton steps from `guess`, falling back to bisection whenever a step
/// leaves the bracket. The bracket must satisfy `cdf(lo) <= p <= cdf(hi)`.
pub(crate) fn invert_cdf(
    cdf: impl Fn(f64) -> Result<f64>,
    pdf: impl Fn(f64) -> f64,
    p: f64,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
) -> Result<f64> {
    let mut x = guess.clamp(lo, hi);
    for iter in 0..MAX_ITER {
        let f = cdf(x)? - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let newton = x - f / d;
        let next = if iter < NEWTON_ITER && d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = x.abs().max(1e-300);
        if (next - x).abs() <= 1e-15 * scale || hi - lo <= 4.0 * f64::EPSILON * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence(format!("quantile search for p={p} did not converge")))
}
