use serde::{Deserialize, Serialize};

use super::tau2::{cochran_q, dl_slices, reml_slices, split};
use super::{validate, HeterogeneityReport, MetaResult, Model, StudyEffect, StudyWeight, Tau2Estimator};
use crate::error::{Error, Result};
use crate::experiment::check_level;
use crate::statdist::{chisq_sf, norm_quantile, t_quantile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTest {
    pub q: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Cochran's Q test of a common effect size.
pub fn heterogeneity(studies: &[StudyEffect]) -> Result<QTest> {
    validate(studies)?;
    if studies.len() < 2 {
        return Err(Error::insufficient("the Q test needs at least two studies"));
    }
    let (y, v) = split(studies);
    q_test(&y, &v)
}

fn q_test(y: &[f64], v: &[f64]) -> Result<QTest> {
    let q = cochran_q(y, v);
    let df = y.len() - 1;
    Ok(QTest {
        q,
        df,
        p_value: chisq_sf(q, df as f64)?,
    })
}

/// I² as a percentage, `max(0, (Q − df)/Q)·100`.
pub fn i2_point(q: f64, q_df: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    (((q - q_df as f64) / q).max(0.0) * 100.0).min(100.0)
}

/// Test-based confidence interval for I², built on ln H with `H = √(Q/df)`.
///
/// The standard error of ln H is `½(ln Q − ln df)/(√(2Q) − √(2k−3))` when
/// `Q > k`, otherwise `√(1/(2(k−2)) · (1 − 1/(3(k−2)²)))`. The interval is
/// centred on `ln max(H, 1)`, so the point estimate always lies inside, and
/// the bounds are mapped back through `I² = (H² − 1)/H²` and floored at 0.
/// With two studies and `Q ≤ 2` the standard error is undefined and the
/// interval is the whole range `(0, 100)`.
pub fn i2_ci(q: f64, q_df: usize, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if !(q >= 0.0) || q_df < 1 {
        return Err(Error::domain(format!("I² interval needs Q >= 0 and df >= 1 (Q={q}, df={q_df})")));
    }
    let df = q_df as f64;
    let k = df + 1.0;
    let se = if q > k {
        0.5 * (q.ln() - df.ln()) / ((2.0 * q).sqrt() - (2.0 * k - 3.0).sqrt())
    } else if q_df >= 2 {
        let m = k - 2.0;
        (1.0 / (2.0 * m) * (1.0 - 1.0 / (3.0 * m * m))).sqrt()
    } else {
        return Ok((0.0, 100.0));
    };
    let z = norm_quantile(0.5 * (1.0 + level))?;
    let center = (q / df).sqrt().max(1.0).ln();
    let to_i2 = |ln_h: f64| {
        let h2 = (2.0 * ln_h).exp();
        ((h2 - 1.0) / h2 * 100.0).clamp(0.0, 100.0)
    };
    Ok((to_i2(center - z * se), to_i2(center + z * se)))
}

/// Weighted pooling shared by the fixed and random models.
pub(crate) struct Pooled {
    pub joint: f64,
    pub se: f64,
    pub weights: Vec<f64>,
}

pub(crate) fn pool(y: &[f64], v: &[f64], tau2: f64) -> Pooled {
    if y.len() == 1 {
        // exact: avoid (y·w)/w rounding
        return Pooled {
            joint: y[0],
            se: (v[0] + tau2).sqrt(),
            weights: vec![1.0 / (v[0] + tau2)],
        };
    }
    let weights: Vec<f64> = v.iter().map(|vi| 1.0 / (vi + tau2)).collect();
    let sw: f64 = weights.iter().sum();
    let joint = y.iter().zip(&weights).map(|(yi, wi)| yi * wi).sum::<f64>() / sw;
    Pooled {
        joint,
        se: (1.0 / sw).sqrt(),
        weights,
    }
}

/// Joint effect and τ² of a random-effects fit, without building a report.
pub(crate) fn random_joint(y: &[f64], v: &[f64], estimator: Tau2Estimator) -> Result<(f64, f64, f64)> {
    let tau2 = estimate_tau2(y, v, estimator)?;
    let p = pool(y, v, tau2);
    Ok((p.joint, p.se, tau2))
}

pub(crate) fn estimate_tau2(y: &[f64], v: &[f64], estimator: Tau2Estimator) -> Result<f64> {
    if y.len() < 2 {
        return Ok(0.0);
    }
    match estimator {
        Tau2Estimator::DerSimonianLaird => Ok(dl_slices(y, v)),
        Tau2Estimator::Reml => reml_slices(y, v),
    }
}

fn build(
    studies: &[StudyEffect],
    model: Model,
    estimator: Option<Tau2Estimator>,
    tau2: f64,
    ci_level: f64,
) -> Result<MetaResult> {
    let (y, v) = split(studies);
    let pooled = pool(&y, &v, tau2);
    let z = norm_quantile(0.5 * (1.0 + ci_level))?;
    let heterogeneity = if studies.len() < 2 {
        HeterogeneityReport::undefined(estimator)
    } else {
        let qt = q_test(&y, &v)?;
        HeterogeneityReport {
            q: qt.q,
            q_df: qt.df,
            q_p: qt.p_value,
            tau2,
            i2_percent: i2_point(qt.q, qt.df),
            i2_ci: i2_ci(qt.q, qt.df, ci_level)?,
            estimator,
        }
    };
    let sw: f64 = pooled.weights.iter().sum();
    let per_study_weights = studies
        .iter()
        .zip(&pooled.weights)
        .map(|(s, w)| StudyWeight {
            label: s.label.clone(),
            weight_percent: 100.0 * w / sw,
        })
        .collect();
    let mut result = MetaResult {
        k: studies.len(),
        model,
        joint_effect: pooled.joint,
        joint_se: pooled.se,
        joint_ci: (pooled.joint - z * pooled.se, pooled.joint + z * pooled.se),
        ci_level,
        prediction_interval: None,
        heterogeneity,
        per_study_weights,
        studies: studies.to_vec(),
    };
    if model == Model::Random && result.k >= 3 {
        result.prediction_interval = Some(prediction_interval(&result, ci_level)?);
    }
    Ok(result)
}

/// Inverse-variance fixed-effect pooling.
pub fn fixed_effect(studies: &[StudyEffect], ci_level: f64) -> Result<MetaResult> {
    validate(studies)?;
    check_level(ci_level)?;
    build(studies, Model::Fixed, None, 0.0, ci_level)
}

/// Random-effects pooling with weights `1/(vᵢ + τ̂²)`.
///
/// A single study is returned as-is with heterogeneity reported as zero
/// (see [`MetaResult::is_single_study`]).
pub fn random_effects(studies: &[StudyEffect], estimator: Tau2Estimator, ci_level: f64) -> Result<MetaResult> {
    validate(studies)?;
    check_level(ci_level)?;
    let (y, v) = split(studies);
    let tau2 = estimate_tau2(&y, &v, estimator)?;
    build(studies, Model::Random, Some(estimator), tau2, ci_level)
}

/// Range expected to contain the true effect of a new replication:
/// `joint ± t(k−2)·√(τ² + se²)`.
pub fn prediction_interval(meta: &MetaResult, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if meta.k < 3 {
        return Err(Error::insufficient(format!(
            "a prediction interval needs at least 3 studies, got {}",
            meta.k
        )));
    }
    let t = t_quantile(0.5 * (1.0 + level), (meta.k - 2) as f64)?;
    let half = t * (meta.heterogeneity.tau2 + meta.joint_se * meta.joint_se).sqrt();
    Ok((meta.joint_effect - half, meta.joint_effect + half))
}
