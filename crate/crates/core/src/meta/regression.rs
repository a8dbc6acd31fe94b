use serde::{Deserialize, Serialize};

use super::tau2::maximize_on_bounds;
use super::{validate, StudyEffect, Tau2Estimator};
use crate::error::{Error, Result};
use crate::statdist::norm_cdf;

/// Single-moderator meta-regression `effect = intercept + slope · moderator`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaRegression {
    pub moderator: String,
    pub k: usize,
    pub intercept: f64,
    pub intercept_se: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub slope_z: f64,
    pub slope_p: f64,
    /// Residual between-study variance.
    pub tau2: f64,
    pub estimator: Tau2Estimator,
    /// Residual heterogeneity statistic (fixed-effect weights), df = k − 2.
    pub q_residual: f64,
}

struct Wls {
    beta: [f64; 2],
    // inverse of X'WX
    cov: [[f64; 2]; 2],
    log_det_xtwx: f64,
    rss: f64,
}

fn wls(x: &[f64], y: &[f64], w: &[f64]) -> Wls {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
        s0 += wi;
        s1 += wi * xi;
        s2 += wi * xi * xi;
        t0 += wi * yi;
        t1 += wi * xi * yi;
    }
    let det = s0 * s2 - s1 * s1;
    let cov = [[s2 / det, -s1 / det], [-s1 / det, s0 / det]];
    let beta = [cov[0][0] * t0 + cov[0][1] * t1, cov[1][0] * t0 + cov[1][1] * t1];
    let rss = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((xi, yi), wi)| {
            let r = yi - beta[0] - beta[1] * xi;
            wi * r * r
        })
        .sum();
    Wls {
        beta,
        cov,
        log_det_xtwx: det.ln(),
        rss,
    }
}

fn weights(v: &[f64], tau2: f64) -> Vec<f64> {
    v.iter().map(|vi| 1.0 / (vi + tau2)).collect()
}

/// Method-of-moments residual τ²: `(Q_E − (k − 2)) / tr(P)` floored at 0.
fn tau2_mom(x: &[f64], y: &[f64], v: &[f64]) -> f64 {
    let w = weights(v, 0.0);
    let fit = wls(x, y, &w);
    let sw: f64 = w.iter().sum();
    // tr((X'WX)⁻¹ X'W²X)
    let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        let w2 = wi * wi;
        a0 += w2;
        a1 += w2 * xi;
        a2 += w2 * xi * xi;
    }
    let c = fit.cov;
    let trace = c[0][0] * a0 + 2.0 * c[0][1] * a1 + c[1][1] * a2;
    let denom = sw - trace;
    if denom <= 0.0 {
        return 0.0;
    }
    ((fit.rss - (x.len() as f64 - 2.0)) / denom).max(0.0)
}

fn residual_reml_ll(x: &[f64], y: &[f64], v: &[f64], tau2: f64) -> f64 {
    let w = weights(v, tau2);
    let fit = wls(x, y, &w);
    let log_det: f64 = v.iter().map(|vi| (vi + tau2).ln()).sum();
    -0.5 * (log_det + fit.log_det_xtwx + fit.rss)
}

/// Weighted least-squares regression of study effects on one moderator,
/// weights `1/(vᵢ + τ̂²)` with τ̂² the residual between-study variance.
/// The slope is tested with a normal approximation.
pub fn meta_regression(studies: &[StudyEffect], moderator: &str, estimator: Tau2Estimator) -> Result<MetaRegression> {
    validate(studies)?;
    let k = studies.len();
    if k < 4 {
        return Err(Error::insufficient(format!("meta-regression needs at least 4 studies, got {k}")));
    }
    let x = studies
        .iter()
        .map(|s| {
            s.moderators
                .get(moderator)
                .copied()
                .filter(|m| m.is_finite())
                .ok_or_else(|| Error::input(format!("study {} has no value for moderator '{moderator}'", s.label)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let xbar = x.iter().sum::<f64>() / k as f64;
    let spread = x.iter().map(|xi| (xi - xbar).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * xbar.abs().max(1.0) {
        return Err(Error::SingularDesign(format!("moderator '{moderator}' is constant across studies")));
    }
    let y: Vec<f64> = studies.iter().map(|s| s.effect).collect();
    let v: Vec<f64> = studies.iter().map(|s| s.variance).collect();

    let q_residual = wls(&x, &y, &weights(&v, 0.0)).rss;
    let tau2 = match estimator {
        Tau2Estimator::DerSimonianLaird => tau2_mom(&x, &y, &v),
        Tau2Estimator::Reml => {
            let ybar = y.iter().sum::<f64>() / k as f64;
            let s2 = y.iter().map(|yi| (yi - ybar).powi(2)).sum::<f64>() / (k as f64 - 1.0);
            maximize_on_bounds(|t| residual_reml_ll(&x, &y, &v, t), 10.0 * s2)?
        }
    };
    let fit = wls(&x, &y, &weights(&v, tau2));
    let slope_se = fit.cov[1][1].sqrt();
    let slope_z = fit.beta[1] / slope_se;
    Ok(MetaRegression {
        moderator: moderator.to_string(),
        k,
        intercept: fit.beta[0],
        intercept_se: fit.cov[0][0].sqrt(),
        slope: fit.beta[1],
        slope_se,
        slope_z,
        slope_p: 2.0 * norm_cdf(-slope_z.abs())?,
        tau2,
        estimator,
        q_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::subgroup_meta;
    use approx::assert_relative_eq;

    fn with_moderator(data: &[(f64, f64, f64)]) -> Vec<StudyEffect> {
        data.iter()
            .enumerate()
            .map(|(i, &(y, v, m))| StudyEffect::new(format!("s{i}"), y, v).unwrap().with_moderator("m", m))
            .collect()
    }

    // dense normal equations solved by Gaussian elimination with pivoting
    fn normal_equations_oracle(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
        let mut a = [[0.0f64; 3]; 2];
        for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
            let row = [1.0, *xi];
            for r in 0..2 {
                for c in 0..2 {
                    a[r][c] += wi * row[r] * row[c];
                }
                a[r][2] += wi * row[r] * yi;
            }
        }
        if a[1][0].abs() > a[0][0].abs() {
            a.swap(0, 1);
        }
        let f = a[1][0] / a[0][0];
        for c in 0..3 {
            a[1][c] -= f * a[0][c];
        }
        let b1 = a[1][2] / a[1][1];
        let b0 = (a[0][2] - a[0][1] * b1) / a[0][0];
        (b0, b1)
    }

    #[test]
    fn exact_line_is_recovered() {
        let s = with_moderator(&[(0.1, 0.05, 0.0), (0.3, 0.05, 1.0), (0.5, 0.05, 2.0), (0.7, 0.05, 3.0), (0.9, 0.05, 4.0)]);
        for est in [Tau2Estimator::DerSimonianLaird, Tau2Estimator::Reml] {
            let r = meta_regression(&s, "m", est).unwrap();
            assert_relative_eq!(r.slope, 0.2, epsilon = 1e-12);
            assert_relative_eq!(r.intercept, 0.1, epsilon = 1e-12);
            assert_eq!(r.tau2, 0.0);
        }
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let data = [
            (0.42, 0.061, 1.3),
            (-0.15, 0.094, 0.2),
            (0.88, 0.033, 2.7),
            (0.31, 0.120, 1.1),
            (1.25, 0.048, 3.9),
            (0.05, 0.075, 0.6),
        ];
        let s = with_moderator(&data);
        let x: Vec<f64> = data.iter().map(|d| d.2).collect();
        let y: Vec<f64> = data.iter().map(|d| d.0).collect();
        for est in [Tau2Estimator::DerSimonianLaird, Tau2Estimator::Reml] {
            let r = meta_regression(&s, "m", est).unwrap();
            let w: Vec<f64> = data.iter().map(|d| 1.0 / (d.1 + r.tau2)).collect();
            let (b0, b1) = normal_equations_oracle(&x, &y, &w);
            assert!((r.intercept - b0).abs() < 1e-8 && (r.slope - b1).abs() < 1e-8);
        }
    }

    #[test]
    fn binary_moderator_matches_subgroup_difference() {
        let data = [(0.1, 0.02, 0.0), (0.2, 0.02, 0.0), (0.9, 0.02, 1.0), (1.0, 0.02, 1.0)];
        let s: Vec<_> = with_moderator(&data)
            .into_iter()
            .zip(["a", "a", "b", "b"])
            .map(|(s, g)| s.with_subgroup(g))
            .collect();
        let reg = meta_regression(&s, "m", Tau2Estimator::DerSimonianLaird).unwrap();
        let sub = subgroup_meta(&s, Tau2Estimator::DerSimonianLaird, 0.95).unwrap();
        let diff = sub.groups[1].result.joint_effect - sub.groups[0].result.joint_effect;
        assert!((reg.slope - diff).abs() < 1e-6);
    }

    #[test]
    fn design_errors() {
        let s = with_moderator(&[(0.1, 0.05, 2.0), (0.3, 0.05, 2.0), (0.5, 0.05, 2.0), (0.7, 0.05, 2.0)]);
        assert!(matches!(meta_regression(&s, "m", Tau2Estimator::Reml), Err(Error::SingularDesign(_))));
        assert!(matches!(meta_regression(&s[..3], "m", Tau2Estimator::Reml), Err(Error::InsufficientData(_))));
        assert!(matches!(meta_regression(&s, "other", Tau2Estimator::Reml), Err(Error::Input(_))));
    }
}
