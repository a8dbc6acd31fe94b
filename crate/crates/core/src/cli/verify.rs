use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::commands::{describe_meta, require_two, write_forest};
use super::config::Settings;
use super::studies::StudiesFile;
use crate::error::{Error, Result};
use crate::meta::{meta_regression, random_effects, subgroup_meta, MetaRegression, MetaResult, SubgroupMetaResult};
use crate::report::build_forest;

/// I² CI width (percentage points) above which the estimate is called
/// imprecise. A heuristic of this tool, reported as such.
pub const WIDE_I2_CI_POINTS: f64 = 50.0;

const MIN_STUDIES_METAREG: usize = 4;

/// One line of the findings section, tagged with the guide step that
/// produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub step: u8,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubgroupFinding {
    pub column: String,
    pub result: SubgroupMetaResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub meta: MetaResult,
    pub heterogeneity_detected: bool,
    pub wide_i2_ci: bool,
    pub subgroups: Vec<SubgroupFinding>,
    pub regressions: Vec<MetaRegression>,
    pub findings: Vec<Finding>,
}

impl VerifyReport {
    pub fn steps(&self, step: u8) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.step == step)
    }
}

fn ci_text(level: f64, (lo, hi): (f64, f64)) -> String {
    format!("{:.0}% CI ({lo:.2}, {hi:.2})", level * 100.0)
}

fn interpret_joint(meta: &MetaResult) -> String {
    let (lo, hi) = meta.joint_ci;
    let ci = ci_text(meta.ci_level, meta.joint_ci);
    let base = format!("joint effect d = {:.2}, {ci}", meta.joint_effect);
    if lo > 0.0 {
        format!("{base}: the interval lies above zero, so the pooled evidence favours the treatment")
    } else if hi < 0.0 {
        format!("{base}: the interval lies below zero, so the pooled evidence favours the control")
    } else {
        format!("{base}: the interval includes zero, so no effect can be claimed from the pooled evidence")
    }
}

fn i2_label(i2: f64) -> &'static str {
    match i2 {
        x if x <= 0.0 => "none",
        x if x < 50.0 => "low",
        x if x < 75.0 => "medium",
        _ => "high",
    }
}

/// Runs the verification guide on a studies file: random-effects pooling,
/// interpretation of the joint effect, I² with its CI, follow-up subgroup
/// and moderator analyses when heterogeneity shows up, a precision warning
/// for wide I² intervals and a closing caveat. Writes `verify.json`.
pub fn cmd_verify(input: &Path, settings: &Settings, out: &mut dyn Write) -> Result<VerifyReport> {
    let file = StudiesFile::load(input)?;
    let studies = file.studies();
    require_two(&studies, "verification")?;
    let mut findings = Vec::new();
    let mut note = |step: u8, text: String| findings.push(Finding { step, text });

    let meta = random_effects(&studies, settings.estimator, settings.ci_level)?;
    note(
        1,
        format!(
            "pooled {} studies with a random-effects model ({} estimate of \u{3c4}\u{b2} = {:.4})",
            meta.k, settings.estimator, meta.heterogeneity.tau2
        ),
    );
    note(2, interpret_joint(&meta));
    if let Some(pi) = meta.prediction_interval {
        note(
            2,
            format!("a new replication's true effect is expected in ({:.2}, {:.2})", pi.0, pi.1),
        );
    }
    note(
        3,
        "sample variables need the raw data of every experiment and a linear mixed model; not covered by this command"
            .to_string(),
    );

    let h = &meta.heterogeneity;
    let detected = h.i2_percent > 0.0;
    let width = h.i2_ci.1 - h.i2_ci.0;
    note(
        4,
        format!(
            "I\u{b2} = {:.1}% ({:.1}%, {:.1}%), {} heterogeneity; Q = {:.2} (df = {}), p = {:.4}",
            h.i2_percent,
            h.i2_ci.0,
            h.i2_ci.1,
            i2_label(h.i2_percent),
            h.q,
            h.q_df,
            h.q_p
        ),
    );
    if !detected {
        note(4, "heterogeneity not detected".to_string());
    }

    let mut subgroups = Vec::new();
    let mut regressions = Vec::new();
    if detected {
        if file.category_columns.is_empty() && file.moderator_columns.is_empty() {
            note(
                5,
                "heterogeneity present but the file has no configuration columns; add a categorical column (use --by) or a moderator:NAME column to explore it"
                    .to_string(),
            );
        }
        for column in &file.category_columns {
            match file.studies_by(column).and_then(|s| subgroup_meta(&s, settings.estimator, settings.ci_level)) {
                Ok(r) => {
                    let joints: Vec<String> = r
                        .groups
                        .iter()
                        .map(|g| format!("{} {:.2} (k = {})", g.name, g.result.joint_effect, g.result.k))
                        .collect();
                    note(
                        5,
                        format!(
                            "subgroups by '{column}': {}; between groups Q = {:.2} (df = {}), p = {:.4}",
                            joints.join(", "),
                            r.q_between,
                            r.q_between_df,
                            r.q_between_p
                        ),
                    );
                    subgroups.push(SubgroupFinding {
                        column: column.clone(),
                        result: r,
                    });
                }
                Err(e) => note(5, format!("subgroups by '{column}' skipped: {e}")),
            }
        }
        for name in &file.moderator_columns {
            if studies.len() < MIN_STUDIES_METAREG {
                note(
                    5,
                    format!("meta-regression on '{name}' skipped: needs at least {MIN_STUDIES_METAREG} studies"),
                );
                continue;
            }
            match meta_regression(&studies, name, settings.estimator) {
                Ok(r) => {
                    note(
                        5,
                        format!(
                            "meta-regression on '{name}': slope {:.4} (se {:.4}), p = {:.4}",
                            r.slope, r.slope_se, r.slope_p
                        ),
                    );
                    regressions.push(r);
                }
                Err(e) => note(5, format!("meta-regression on '{name}' skipped: {e}")),
            }
        }
    }

    let wide = width > WIDE_I2_CI_POINTS;
    if wide {
        note(
            6,
            format!(
                "the I\u{b2} CI spans {width:.1} points (> {WIDE_I2_CI_POINTS:.0}, a heuristic threshold of this tool): the heterogeneity estimate is imprecise and more experiments are needed"
            ),
        );
    } else {
        note(6, format!("the I\u{b2} CI spans {width:.1} points"));
    }
    note(
        7,
        "caveat: an association with a configuration or sample variable does not establish that the variable causes the difference"
            .to_string(),
    );

    describe_meta(&meta, out)?;
    writeln!(out)?;
    writeln!(out, "findings:")?;
    for f in &findings {
        writeln!(out, "[step {}] {}", f.step, f.text)?;
    }

    let report = VerifyReport {
        meta,
        heterogeneity_detected: detected,
        wide_i2_ci: wide,
        subgroups,
        regressions,
        findings,
    };
    std::fs::create_dir_all(&settings.out)?;
    std::fs::write(
        settings.out.join("verify.json"),
        serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n",
    )?;
    write_forest(&build_forest(&report.meta), settings, out)?;
    writeln!(out, "wrote {}", settings.out.display())?;
    Ok(report)
}
