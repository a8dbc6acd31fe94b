//! Fixed- and random-effects meta-analysis of standardized mean differences.
//!
//! Inputs are [`StudyEffect`]s (an effect estimate and its sampling
//! variance); outputs are [`MetaResult`]s carrying the joint effect, its
//! confidence interval, heterogeneity diagnostics (Q, τ², I² with a
//! confidence interval) and, for random-effects fits with k ≥ 3, a
//! prediction interval for the effect of a new replication.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{cohens_d, d_variance, GroupSummary};

pub(crate) mod pooling;
mod regression;
mod subgroup;
mod tau2;

pub use pooling::{fixed_effect, heterogeneity, i2_ci, i2_point, prediction_interval, random_effects, QTest};
pub use regression::{meta_regression, MetaRegression};
pub use subgroup::{subgroup_meta, SubgroupFit, SubgroupMetaResult};
pub use tau2::{reml_log_likelihood, tau2_dl, tau2_reml};

/// One study's effect estimate, the unit of meta-analysis input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyEffect {
    pub label: String,
    pub effect: f64,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub moderators: BTreeMap<String, f64>,
}

impl StudyEffect {
    pub fn new(label: impl Into<String>, effect: f64, variance: f64) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::input("study label must not be empty"));
        }
        if !effect.is_finite() {
            return Err(Error::input(format!("study {label}: effect must be finite")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::input(format!("study {label}: variance must be positive, got {variance}")));
        }
        Ok(Self {
            label,
            effect,
            variance,
            subgroup: None,
            moderators: BTreeMap::new(),
        })
    }

    /// Cohen's d and its variance from two arm summaries.
    pub fn from_summaries(label: impl Into<String>, control: &GroupSummary, treatment: &GroupSummary) -> Result<Self> {
        let d = cohens_d(control, treatment)?;
        Self::new(label, d, d_variance(d, control.n, treatment.n)?)
    }

    pub fn with_subgroup(mut self, subgroup: impl Into<String>) -> Self {
        self.subgroup = Some(subgroup.into());
        self
    }

    pub fn with_moderator(mut self, name: impl Into<String>, value: f64) -> Self {
        self.moderators.insert(name.into(), value);
        self
    }
}

/// Estimator of the between-study variance τ².
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tau2Estimator {
    /// DerSimonian–Laird method of moments.
    #[serde(rename = "dl")]
    DerSimonianLaird,
    /// Restricted maximum likelihood.
    #[default]
    #[serde(rename = "reml")]
    Reml,
}

impl fmt::Display for Tau2Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tau2Estimator::DerSimonianLaird => "DL",
            Tau2Estimator::Reml => "REML",
        })
    }
}

impl FromStr for Tau2Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dl" => Ok(Tau2Estimator::DerSimonianLaird),
            "reml" => Ok(Tau2Estimator::Reml),
            other => Err(Error::input(format!("unknown estimator '{other}' (expected dl or reml)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Fixed,
    Random,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Fixed => "Fixed-effect model",
            Model::Random => "Random-effects model",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub q: f64,
    pub q_df: usize,
    pub q_p: f64,
    pub tau2: f64,
    pub i2_percent: f64,
    pub i2_ci: (f64, f64),
    /// `None` for fixed-effect fits, where τ² is 0 by assumption.
    pub estimator: Option<Tau2Estimator>,
}

impl HeterogeneityReport {
    pub(crate) fn undefined(estimator: Option<Tau2Estimator>) -> Self {
        Self {
            q: 0.0,
            q_df: 0,
            q_p: 1.0,
            tau2: 0.0,
            i2_percent: 0.0,
            i2_ci: (0.0, 0.0),
            estimator,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyWeight {
    pub label: String,
    pub weight_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaResult {
    pub k: usize,
    pub model: Model,
    pub joint_effect: f64,
    pub joint_se: f64,
    pub joint_ci: (f64, f64),
    pub ci_level: f64,
    pub prediction_interval: Option<(f64, f64)>,
    pub heterogeneity: HeterogeneityReport,
    pub per_study_weights: Vec<StudyWeight>,
    /// Per-study inputs, kept so reports can be drawn from the result alone.
    pub studies: Vec<StudyEffect>,
}

impl MetaResult {
    /// A single study: heterogeneity is undefined and reported as zero.
    pub fn is_single_study(&self) -> bool {
        self.k == 1
    }

    /// z statistic and two-sided p-value for the joint effect.
    pub fn joint_z_test(&self) -> (f64, f64) {
        let z = self.joint_effect / self.joint_se;
        (z, 2.0 * crate::statdist::norm_cdf(-z.abs()).unwrap_or(0.0))
    }
}

pub(crate) fn validate(studies: &[StudyEffect]) -> Result<()> {
    if studies.is_empty() {
        return Err(Error::insufficient("meta-analysis needs at least one study"));
    }
    let mut seen = HashSet::new();
    for s in studies {
        if s.label.trim().is_empty() {
            return Err(Error::input("study label must not be empty"));
        }
        if !seen.insert(s.label.as_str()) {
            return Err(Error::input(format!("duplicate study label '{}'", s.label)));
        }
        if !s.effect.is_finite() {
            return Err(Error::input(format!("study {}: effect must be finite", s.label)));
        }
        if !(s.variance > 0.0 && s.variance.is_finite()) {
            return Err(Error::input(format!("study {}: variance must be positive", s.label)));
        }
    }
    Ok(())
}
