//! Forest plots as monospace text and SVG. Pass a path to save the SVG.
//!
//! `cargo run --example forest_plot [out.svg]`

use replimeta::meta::{random_effects, subgroup_meta, StudyEffect, Tau2Estimator};
use replimeta::report::{build_forest, render_forest_svg, render_forest_text};

fn main() -> replimeta::Result<()> {
    let studies = vec![
        StudyEffect::new("Lab-A", -0.31, 0.09)?.with_subgroup("Java"),
        StudyEffect::new("Lab-B", 0.18, 0.11)?.with_subgroup("Java"),
        StudyEffect::new("Site-C", 0.42, 0.10)?.with_subgroup("C++"),
        StudyEffect::new("Site-D", 0.05, 0.14)?.with_subgroup("C++"),
    ];

    let plain = build_forest(&random_effects(&studies, Tau2Estimator::Reml, 0.95)?);
    println!("{}", render_forest_text(&plain, 100)?);

    let grouped = build_forest(&subgroup_meta(&studies, Tau2Estimator::Reml, 0.95)?);
    println!("{}", render_forest_text(&grouped, 100)?);

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, render_forest_svg(&grouped))?;
        println!("wrote {path}");
    }
    Ok(())
}
