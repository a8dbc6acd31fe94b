//! Subgroup meta-analysis by a categorical variable and a single-moderator
//! meta-regression.
//!
//! `cargo run --example subgroup`

use replimeta::meta::{meta_regression, subgroup_meta, StudyEffect, Tau2Estimator};

fn main() -> replimeta::Result<()> {
    let raw = [
        ("S1", 0.05, 0.06, "Java", 2.0),
        ("S2", 0.20, 0.05, "Java", 3.0),
        ("S3", 0.10, 0.07, "Java", 2.5),
        ("S4", 0.85, 0.06, "C++", 6.0),
        ("S5", 0.60, 0.05, "C++", 5.0),
    ];
    let studies = raw
        .iter()
        .map(|&(label, d, v, env, years)| {
            Ok(StudyEffect::new(label, d, v)?.with_subgroup(env).with_moderator("experience", years))
        })
        .collect::<replimeta::Result<Vec<_>>>()?;

    let sub = subgroup_meta(&studies, Tau2Estimator::Reml, 0.95)?;
    for g in &sub.groups {
        let r = &g.result;
        println!(
            "{:<5} k={} joint {:.2} ({:.2}, {:.2}) I2 {:.1}%",
            g.name, r.k, r.joint_effect, r.joint_ci.0, r.joint_ci.1, r.heterogeneity.i2_percent
        );
    }
    println!(
        "overall {:.2}, between-groups Q = {:.2} (df = {}), p = {:.4}",
        sub.overall.joint_effect, sub.q_between, sub.q_between_df, sub.q_between_p
    );

    let reg = meta_regression(&studies, "experience", Tau2Estimator::Reml)?;
    println!(
        "d = {:.3} + {:.3} * experience (slope se {:.3}, p = {:.4}), residual tau2 = {:.4}",
        reg.intercept, reg.slope, reg.slope_se, reg.slope_p, reg.tau2
    );
    Ok(())
}
