use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pooling::{heterogeneity, random_effects};
use super::{validate, MetaResult, StudyEffect, Tau2Estimator};
use crate::error::{Error, Result};
use crate::experiment::check_level;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupFit {
    pub name: String,
    pub result: MetaResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupMetaResult {
    /// Sorted by subgroup name.
    pub groups: Vec<SubgroupFit>,
    pub overall: MetaResult,
    pub q_between: f64,
    pub q_between_df: usize,
    pub q_between_p: f64,
}

/// Separate random-effects fits per subgroup, plus a test of whether the
/// subgroup joint effects differ (fixed-effect Q over the subgroup joints).
pub fn subgroup_meta(studies: &[StudyEffect], estimator: Tau2Estimator, ci_level: f64) -> Result<SubgroupMetaResult> {
    validate(studies)?;
    check_level(ci_level)?;
    let mut by_group: BTreeMap<&str, Vec<StudyEffect>> = BTreeMap::new();
    for s in studies {
        let name = s
            .subgroup
            .as_deref()
            .filter(|g| !g.trim().is_empty())
            .ok_or_else(|| Error::input(format!("study {} has no subgroup label", s.label)))?;
        by_group.entry(name).or_default().push(s.clone());
    }
    let groups = by_group
        .into_iter()
        .map(|(name, members)| {
            Ok(SubgroupFit {
                name: name.to_string(),
                result: random_effects(&members, estimator, ci_level)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let overall = random_effects(studies, estimator, ci_level)?;

    let (q_between, q_between_df, q_between_p) = if groups.len() < 2 {
        (0.0, 0, 1.0)
    } else {
        let joints = groups
            .iter()
            .map(|g| StudyEffect::new(g.name.clone(), g.result.joint_effect, g.result.joint_se.powi(2)))
            .collect::<Result<Vec<_>>>()?;
        let q = heterogeneity(&joints)?;
        (q.q, q.df, q.p_value)
    };

    Ok(SubgroupMetaResult {
        groups,
        overall,
        q_between,
        q_between_df,
        q_between_p,
    })
}
