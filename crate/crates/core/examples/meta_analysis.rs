//! Fixed- and random-effects pooling of three studies with both tau²
//! estimators, heterogeneity statistics and the prediction interval.
//!
//! `cargo run --example meta_analysis`

use replimeta::experiment::GroupSummary;
use replimeta::meta::{fixed_effect, random_effects, StudyEffect, Tau2Estimator};

fn main() -> replimeta::Result<()> {
    let studies = vec![
        StudyEffect::new("Lab-A", 0.2, 0.04)?,
        StudyEffect::new("Lab-B", 0.5, 0.04)?,
        StudyEffect::from_summaries(
            "Site-D",
            &GroupSummary::new(12, 50.0, 10.0)?,
            &GroupSummary::new(12, 58.0, 10.0)?,
        )?,
    ];

    let fe = fixed_effect(&studies, 0.95)?;
    println!("{}: {:.3} ({:.3}, {:.3})", fe.model, fe.joint_effect, fe.joint_ci.0, fe.joint_ci.1);
    for est in [Tau2Estimator::DerSimonianLaird, Tau2Estimator::Reml] {
        let re = random_effects(&studies, est, 0.95)?;
        let h = &re.heterogeneity;
        println!(
            "{} ({est}): {:.3} ({:.3}, {:.3}), tau2 = {:.4}, I2 = {:.1}% ({:.1}%, {:.1}%), Q = {:.2}, p = {:.3}",
            re.model, re.joint_effect, re.joint_ci.0, re.joint_ci.1, h.tau2, h.i2_percent, h.i2_ci.0, h.i2_ci.1, h.q, h.q_p
        );
        if let Some((lo, hi)) = re.prediction_interval {
            println!("  prediction interval ({lo:.3}, {hi:.3})");
        }
        for w in &re.per_study_weights {
            println!("  {:<9} {:5.1}%", w.label, w.weight_percent);
        }
    }
    Ok(())
}
