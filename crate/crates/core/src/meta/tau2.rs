//! Between-study variance estimators.

use super::{validate, StudyEffect};
use crate::error::{Error, Result};

pub(crate) fn fe_weights(v: &[f64]) -> Vec<f64> {
    v.iter().map(|vi| 1.0 / vi).collect()
}

pub(crate) fn weighted_mean(y: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    y.iter().zip(w).map(|(yi, wi)| yi * wi).sum::<f64>() / sw
}

pub(crate) fn cochran_q(y: &[f64], v: &[f64]) -> f64 {
    let w = fe_weights(v);
    let mu = weighted_mean(y, &w);
    y.iter().zip(&w).map(|(yi, wi)| wi * (yi - mu) * (yi - mu)).sum()
}

pub(crate) fn dl_slices(y: &[f64], v: &[f64]) -> f64 {
    let k = y.len();
    let w = fe_weights(v);
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let q = cochran_q(y, v);
    let denom = sw - sw2 / sw;
    if denom <= 0.0 {
        return 0.0;
    }
    ((q - (k - 1) as f64) / denom).max(0.0)
}

/// DerSimonian–Laird estimate `max(0, (Q − (k−1)) / (Σw − Σw²/Σw))`.
pub fn tau2_dl(studies: &[StudyEffect]) -> Result<f64> {
    validate(studies)?;
    if studies.len() < 2 {
        return Err(Error::insufficient("τ² needs at least two studies"));
    }
    let (y, v) = split(studies);
    Ok(dl_slices(&y, &v))
}

pub(crate) fn split(studies: &[StudyEffect]) -> (Vec<f64>, Vec<f64>) {
    studies.iter().map(|s| (s.effect, s.variance)).unzip()
}

/// Restricted log-likelihood of the random-effects model (constant dropped):
/// `−½ [Σ ln(vᵢ+τ²) + ln Σwᵢ + Σ wᵢ (yᵢ − μ̂)²]`, `wᵢ = 1/(vᵢ+τ²)`.
pub fn reml_log_likelihood(studies: &[StudyEffect], tau2: f64) -> f64 {
    let (y, v) = split(studies);
    reml_ll_slices(&y, &v, tau2)
}

pub(crate) fn reml_ll_slices(y: &[f64], v: &[f64], tau2: f64) -> f64 {
    let mut sw = 0.0;
    let mut swy = 0.0;
    let mut log_det = 0.0;
    for (yi, vi) in y.iter().zip(v) {
        let t = vi + tau2;
        sw += 1.0 / t;
        swy += yi / t;
        log_det += t.ln();
    }
    let mu = swy / sw;
    let rss: f64 = y.iter().zip(v).map(|(yi, vi)| (yi - mu) * (yi - mu) / (vi + tau2)).sum();
    -0.5 * (log_det + sw.ln() + rss)
}

pub(crate) const REML_TOL: f64 = 1e-8;
const GRID_POINTS: usize = 64;
const MAX_EXPANSIONS: usize = 30;
const BRENT_MAX_ITER: usize = 500;

/// REML estimate of τ² by bounded one-dimensional maximization over
/// `[0, 10·s²]`, `s²` the sample variance of the effects.
pub fn tau2_reml(studies: &[StudyEffect]) -> Result<f64> {
    validate(studies)?;
    if studies.len() < 2 {
        return Err(Error::insufficient("τ² needs at least two studies"));
    }
    let (y, v) = split(studies);
    reml_slices(&y, &v)
}

pub(crate) fn reml_slices(y: &[f64], v: &[f64]) -> Result<f64> {
    // canonical order, so the optimizer path does not depend on study order
    let mut pairs: Vec<(f64, f64)> = y.iter().copied().zip(v.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (y, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (y, v) = (&y[..], &v[..]);
    let k = y.len() as f64;
    let mean = y.iter().sum::<f64>() / k;
    let s2 = y.iter().map(|yi| (yi - mean) * (yi - mean)).sum::<f64>() / (k - 1.0);
    maximize_on_bounds(|t| reml_ll_slices(y, v, t), 10.0 * s2)
}

/// Maximizes a 1-D objective over `[0, upper]`: a coarse grid locates the
/// best bracket, Brent's method refines it. If the maximum sits at the upper
/// bound the bound is doubled.
pub(crate) fn maximize_on_bounds(f: impl Fn(f64) -> f64, mut upper: f64) -> Result<f64> {
    if !(upper > 0.0) || !upper.is_finite() {
        return Ok(0.0);
    }
    for _ in 0..MAX_EXPANSIONS {
        let step = upper / GRID_POINTS as f64;
        let (mut best_i, mut best_f) = (0, f(0.0));
        for i in 1..=GRID_POINTS {
            let fi = f(i as f64 * step);
            if fi > best_f {
                best_i = i;
                best_f = fi;
            }
        }
        if best_i == GRID_POINTS {
            upper *= 2.0;
            continue;
        }
        let lo = best_i.saturating_sub(1) as f64 * step;
        let hi = (best_i + 1) as f64 * step;
        let x = brent_min(|t| -f(t), lo, hi, REML_TOL)?;
        // the boundary at zero is a legitimate optimum
        return Ok(if best_i == 0 && f(0.0) >= f(x) { 0.0 } else { x });
    }
    Err(Error::Convergence("τ² maximum keeps escaping the upper search bound".into()))
}

/// Brent's minimization on `[a, b]` (golden section with parabolic steps).
pub(crate) fn brent_min(f: impl Fn(f64) -> f64, ax: f64, bx: f64, tol: f64) -> Result<f64> {
    let c = 0.5 * (3.0 - 5f64.sqrt());
    let eps = f64::EPSILON.sqrt();
    let (mut a, mut b) = (ax, bx);
    let mut v = a + c * (b - a);
    let mut w = v;
    let mut x = v;
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut fx = f(x);
    let (mut fv, mut fw) = (fx, fx);
    let tol3 = tol / 3.0;

    for _ in 0..BRENT_MAX_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = eps * x.abs() + tol3;
        let t2 = 2.0 * tol1;
        if (x - xm).abs() <= t2 - 0.5 * (b - a) {
            return Ok(x);
        }
        let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
        if e.abs() > tol1 {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            r = e;
            e = d;
        }
        if p.abs() >= (0.5 * q * r).abs() || p <= q * (a - x) || p >= q * (b - x) {
            e = if x < xm { b - x } else { a - x };
            d = c * e;
        } else {
            d = p / q;
            let u = x + d;
            if u - a < t2 || b - u < t2 {
                d = if x < xm { tol1 } else { -tol1 };
            }
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::Convergence("Brent minimization hit its iteration cap".into()))
}
