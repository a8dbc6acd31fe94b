use super::normal::{phi, quantile_unchecked};
use super::root::invert_cdf;
use super::special::{inc_beta_xy, ln_beta, ln_gamma};
use crate::error::{Error, Result};

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && !df.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!("degrees of freedom must be positive, got {df}")))
    }
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn t_cdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() {
        return Err(Error::domain("t_cdf of NaN"));
    }
    if df.is_infinite() {
        return Ok(phi(x));
    }
    let lower = t_lower_tail(-x.abs(), df)?;
    Ok(if x <= 0.0 { lower } else { 1.0 - lower })
}

/// Upper tail `P(T > x)`; avoids cancellation for large positive `x`.
pub fn t_sf(x: f64, df: f64) -> Result<f64> {
    t_cdf(-x, df)
}

// P(T <= x) for x <= 0
fn t_lower_tail(x: f64, df: f64) -> Result<f64> {
    if x.is_infinite() {
        return Ok(0.0);
    }
    let x2 = x * x;
    let (b, a) = (df / (df + x2), x2 / (df + x2));
    Ok(0.5 * inc_beta_xy(0.5 * df, 0.5, b, a)?)
}

pub fn t_pdf(x: f64, df: f64) -> f64 {
    let ln = -0.5 * (df + 1.0) * (x * x / df).ln_1p() - 0.5 * df.ln() - ln_beta(0.5 * df, 0.5);
    ln.exp()
}

/// Quantile of Student's t distribution.
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("t_quantile needs 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if df.is_infinite() {
        return Ok(quantile_unchecked(p));
    }
    if df == 1.0 {
        return Ok((std::f64::consts::PI * (p - 0.5)).tan());
    }
    if df == 2.0 {
        return Ok((2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt());
    }
    if p > 0.5 {
        return Ok(-t_quantile(1.0 - p, df)?);
    }
    // lower tail: root lies in (-inf, 0)
    let z = quantile_unchecked(p);
    let guess = z + (z.powi(3) + z) / (4.0 * df) + (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * df * df);
    let mut lo = guess.min(-1.0);
    while t_cdf(lo, df)? > p {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(Error::Convergence(format!("t_quantile bracket for p={p}, df={df}")));
        }
    }
    invert_cdf(|x| t_cdf(x, df), |x| t_pdf(x, df), p, lo, 0.0, guess)
}

const NCT_REL_TOL: f64 = 1e-10;
const NCT_MAX_TERMS: usize = 20_000;

/// CDF of the noncentral t distribution with noncentrality `ncp`.
///
/// Poisson mixture of incomplete beta functions:
/// `F(t) = Φ(-δ) + ½ Σ_j [p_j I_x(j+½, ν/2) + q_j I_x(j+1, ν/2)]` for `t >= 0`,
/// with `x = t²/(t²+ν)`; negative `t` uses `F(t; δ) = 1 - F(-t; -δ)`.
pub fn noncentral_t_cdf(x: f64, df: f64, ncp: f64) -> Result<f64> {
    check_df(df)?;
    if !x.is_finite() || !ncp.is_finite() || df.is_infinite() {
        return Err(Error::domain(format!(
            "noncentral_t_cdf needs finite inputs (x={x}, df={df}, ncp={ncp})"
        )));
    }
    if x < 0.0 {
        return Ok((1.0 - nct_nonneg(-x, df, -ncp)?).clamp(0.0, 1.0));
    }
    Ok(nct_nonneg(x, df, ncp)?.clamp(0.0, 1.0))
}

fn nct_nonneg(t: f64, df: f64, delta: f64) -> Result<f64> {
    let base = phi(-delta);
    if t == 0.0 {
        return Ok(base);
    }
    let t2 = t * t;
    let x = t2 / (t2 + df);
    let y = df / (t2 + df);
    let lambda = 0.5 * delta * delta;
    let half_df = 0.5 * df;
    let ln_lambda = lambda.ln();
    let sqrt2 = std::f64::consts::SQRT_2;

    let mut sum = 0.0;
    let mut cum_p = 0.0;
    for j in 0..NCT_MAX_TERMS {
        let jf = j as f64;
        // Poisson weights; lambda = 0 leaves only the j = 0 term
        let (pj, qj) = if lambda == 0.0 {
            if j == 0 {
                (1.0, 0.0)
            } else {
                (0.0, 0.0)
            }
        } else {
            let ln_pj = -lambda + jf * ln_lambda - ln_gamma(jf + 1.0);
            let ln_qj = -lambda + jf * ln_lambda - ln_gamma(jf + 1.5);
            (ln_pj.exp(), delta * ln_qj.exp() / sqrt2)
        };
        let i_odd = inc_beta_xy(jf + 0.5, half_df, x, y)?;
        let i_even = inc_beta_xy(jf + 1.0, half_df, x, y)?;
        sum += pj * i_odd + qj * i_even;
        cum_p += pj;

        if jf + 1.0 > lambda {
            // beyond the mode both weight sequences shrink at least
            // geometrically with ratio r, and I_x decreases in its first
            // argument, so the tail is bounded by term * r / (1 - r)
            let r_p = lambda / (jf + 1.0);
            let r_q = lambda / (jf + 1.5);
            let tail = pj * i_odd * r_p / (1.0 - r_p) + qj.abs() * i_even * r_q / (1.0 - r_q);
            let total = base + 0.5 * sum;
            if 0.5 * tail <= NCT_REL_TOL * total.abs() || (lambda == 0.0) || (cum_p >= 1.0 && tail == 0.0) {
                return Ok(total);
            }
        }
    }
    Err(Error::Convergence(format!(
        "noncentral t series did not converge (t={t}, df={df}, ncp={delta})"
    )))
}
