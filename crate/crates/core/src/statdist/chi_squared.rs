use super::normal::quantile_unchecked;
use super::root::invert_cdf;
use super::special::{inc_gamma_lower, inc_gamma_upper, ln_gamma};
use crate::error::{Error, Result};

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && df.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("degrees of freedom must be positive and finite, got {df}")))
    }
}

/// CDF of the chi-square distribution.
pub fn chisq_cdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("chisq_cdf needs x >= 0, got {x}")));
    }
    inc_gamma_lower(0.5 * df, 0.5 * x)
}

/// Upper tail `P(X > x)`, computed directly for small p-values.
pub fn chisq_sf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("chisq_sf needs x >= 0, got {x}")));
    }
    inc_gamma_upper(0.5 * df, 0.5 * x)
}

pub fn chisq_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Quantile of the chi-square distribution.
pub fn chisq_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("chisq_quantile needs 0 < p < 1, got {p}")));
    }
    if df == 2.0 {
        return Ok(-2.0 * (-p).ln_1p());
    }
    // Wilson-Hilferty starting point
    let z = quantile_unchecked(p);
    let c = 2.0 / (9.0 * df);
    let guess = (df * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-10);
    let mut hi = guess.max(1.0);
    while chisq_cdf(hi, df)? < p {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Convergence(format!("chisq_quantile bracket for p={p}, df={df}")));
        }
    }
    invert_cdf(|x| chisq_cdf(x, df), |x| chisq_pdf(x, df), p, 0.0, hi, guess)
}
