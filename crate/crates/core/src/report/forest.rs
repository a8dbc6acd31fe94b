use serde::{Deserialize, Serialize};

use crate::meta::{MetaResult, SubgroupMetaResult};

/// One study line of a forest plot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestRow {
    pub label: String,
    pub effect: f64,
    pub ci: (f64, f64),
    /// Share of the overall fit's weight.
    pub weight_percent: f64,
}

/// A pooled estimate drawn as a diamond spanning its CI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestDiamond {
    pub label: String,
    pub effect: f64,
    pub ci: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityLine {
    pub i2_percent: f64,
    pub i2_ci: (f64, f64),
    pub tau2: f64,
    pub q: f64,
    pub q_df: usize,
    pub q_p: f64,
}

impl HeterogeneityLine {
    fn from_meta(meta: &MetaResult) -> Self {
        let h = &meta.heterogeneity;
        Self {
            i2_percent: h.i2_percent,
            i2_ci: h.i2_ci,
            tau2: h.tau2,
            q: h.q,
            q_df: h.q_df,
            q_p: h.q_p,
        }
    }

    /// `Heterogeneity: I²=55.6% (0.0%,86.9%), τ²=0.050, Q=4.50 (df=2), p=0.105`
    pub fn render(&self) -> String {
        format!(
            "Heterogeneity: I\u{b2}={:.1}% ({:.1}%,{:.1}%), \u{3c4}\u{b2}={:.3}, Q={:.2} (df={}), p={}",
            self.i2_percent,
            self.i2_ci.0,
            self.i2_ci.1,
            self.tau2,
            self.q,
            self.q_df,
            format_p(self.q_p)
        )
    }
}

pub(crate) fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// Studies of one subgroup (or all studies, unnamed) with the subgroup's
/// own diamond and heterogeneity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestSection {
    pub name: Option<String>,
    pub rows: Vec<ForestRow>,
    /// Subgroup diamond; `None` when the section is the whole plot.
    pub joint: Option<ForestDiamond>,
    pub heterogeneity: Option<HeterogeneityLine>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetweenGroupsLine {
    pub q: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestPlotModel {
    pub ci_level: f64,
    pub sections: Vec<ForestSection>,
    pub joint: ForestDiamond,
    pub heterogeneity: HeterogeneityLine,
    pub prediction_interval: Option<(f64, f64)>,
    pub between_groups: Option<BetweenGroupsLine>,
    /// Effect-axis limits.
    pub axis: (f64, f64),
}

impl ForestPlotModel {
    pub fn rows(&self) -> impl Iterator<Item = &ForestRow> {
        self.sections.iter().flat_map(|s| s.rows.iter())
    }

    /// All diamonds, subgroup ones first and the overall one last.
    pub fn diamonds(&self) -> Vec<&ForestDiamond> {
        self.sections
            .iter()
            .filter_map(|s| s.joint.as_ref())
            .chain(std::iter::once(&self.joint))
            .collect()
    }

    /// Replaces the automatic axis; intervals outside it are clipped with an
    /// annotation when rendered.
    pub fn with_axis(mut self, lo: f64, hi: f64) -> Self {
        if lo < hi && lo.is_finite() && hi.is_finite() {
            self.axis = (lo, hi);
        }
        self
    }

    fn auto_axis(&mut self) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let cis = self
            .rows()
            .map(|r| r.ci)
            .chain(self.diamonds().into_iter().map(|d| d.ci))
            .collect::<Vec<_>>();
        for (a, b) in cis {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let pad = 0.1 * (hi - lo);
        let (mut lo, mut hi) = (lo - pad, hi + pad);
        lo = lo.min(0.0);
        hi = hi.max(0.0);
        if hi - lo <= 0.0 {
            (lo, hi) = (-1.0, 1.0);
        }
        self.axis = (lo, hi);
    }
}

fn rows_of(meta: &MetaResult, weights_from: &MetaResult) -> Vec<ForestRow> {
    meta.studies
        .iter()
        .map(|s| {
            let half = meta_z(meta) * s.variance.sqrt();
            let weight_percent = weights_from
                .per_study_weights
                .iter()
                .find(|w| w.label == s.label)
                .map_or(0.0, |w| w.weight_percent);
            ForestRow {
                label: s.label.clone(),
                effect: s.effect,
                ci: (s.effect - half, s.effect + half),
                weight_percent,
            }
        })
        .collect()
}

// study CIs use the same level as the pooled CI
fn meta_z(meta: &MetaResult) -> f64 {
    crate::statdist::norm_quantile(0.5 * (1.0 + meta.ci_level)).unwrap_or(1.959_963_984_540_054)
}

fn diamond(label: String, meta: &MetaResult) -> ForestDiamond {
    ForestDiamond {
        label,
        effect: meta.joint_effect,
        ci: meta.joint_ci,
    }
}

/// Anything a forest plot can be drawn from.
pub trait ForestSource {
    fn to_forest(&self) -> ForestPlotModel;
}

impl ForestSource for MetaResult {
    fn to_forest(&self) -> ForestPlotModel {
        let mut model = ForestPlotModel {
            ci_level: self.ci_level,
            sections: vec![ForestSection {
                name: None,
                rows: rows_of(self, self),
                joint: None,
                heterogeneity: None,
            }],
            joint: diamond(self.model.to_string(), self),
            heterogeneity: HeterogeneityLine::from_meta(self),
            prediction_interval: self.prediction_interval,
            between_groups: None,
            axis: (0.0, 0.0),
        };
        model.auto_axis();
        model
    }
}

impl ForestSource for SubgroupMetaResult {
    fn to_forest(&self) -> ForestPlotModel {
        let sections = self
            .groups
            .iter()
            .map(|g| ForestSection {
                name: Some(g.name.clone()),
                rows: rows_of(&g.result, &self.overall),
                joint: Some(diamond(format!("{} subtotal", g.name), &g.result)),
                heterogeneity: (g.result.k > 1).then(|| HeterogeneityLine::from_meta(&g.result)),
            })
            .collect();
        let mut model = ForestPlotModel {
            ci_level: self.overall.ci_level,
            sections,
            joint: diamond(self.overall.model.to_string(), &self.overall),
            heterogeneity: HeterogeneityLine::from_meta(&self.overall),
            prediction_interval: self.overall.prediction_interval,
            between_groups: (self.q_between_df > 0).then(|| BetweenGroupsLine {
                q: self.q_between,
                df: self.q_between_df,
                p: self.q_between_p,
            }),
            axis: (0.0, 0.0),
        };
        model.auto_axis();
        model
    }
}

/// Forest-plot model of a meta-analysis or a subgroup meta-analysis.
pub fn build_forest<S: ForestSource + ?Sized>(meta: &S) -> ForestPlotModel {
    meta.to_forest()
}
