use std::fs::File;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use super::config::Settings;
use super::studies::{read_scores, StudiesFile};
use super::ForestFormat;
use crate::error::{Error, Result};
use crate::experiment::analyze_experiment;
use crate::meta::{fixed_effect, meta_regression, random_effects, subgroup_meta, MetaResult, StudyEffect};
use crate::report::{
    build_forest, density_points, render_forest_svg, render_forest_text, write_all_significant_table, write_density_csv,
    write_interval_table, write_power_table, ForestPlotModel,
};
use crate::simlab::{
    chunk_comparison_with, effect_variability, meta_variability, power_curve, CellSummary, SimulationReport, StudyKind,
};

const DENSITY_GRID: usize = 200;
const TEXT_FOREST_WIDTH: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeKind {
    Experiment,
    Meta,
    Subgroup,
    Metareg,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn cell_tag(c: &CellSummary) -> String {
    let mut tag = format!("d{}_n{}", c.true_d, c.n_total);
    if let Some(g) = c.group_size {
        tag.push_str(&format!("_g{g}"));
    }
    if let Some(k) = c.chunks {
        tag.push_str(&format!("_c{k}"));
    }
    tag
}

/// Runs one simulation study and writes `<kind>.json`, `<kind>.csv`,
/// `<kind>_table.csv` and per-cell density curves under `density/`.
pub fn cmd_simulate(kind: StudyKind, settings: &Settings, out: &mut dyn Write) -> Result<SimulationReport> {
    let plan = settings.plan(kind)?;
    writeln!(out, "seed: {}", plan.master_seed)?;
    let mut run_plan = plan.clone();
    run_plan.keep_samples = true;
    let mut report = match kind {
        StudyKind::Power => power_curve(&run_plan)?,
        StudyKind::Effects => effect_variability(&run_plan)?,
        StudyKind::Meta => meta_variability(&run_plan, settings.estimator)?,
        StudyKind::Chunks => {
            chunk_comparison_with(&run_plan, &plan.chunk_counts, plan.chunk_total_n, settings.chunk_estimator)?
        }
    };

    let dir = &settings.out;
    std::fs::create_dir_all(dir)?;
    if kind != StudyKind::Power {
        let density_dir = dir.join("density");
        std::fs::create_dir_all(&density_dir)?;
        for c in &report.cells {
            let tag = cell_tag(c);
            if let Some(s) = &c.samples {
                let name = if kind == StudyKind::Chunks { format!("{kind}_{tag}_joint.csv") } else { format!("{kind}_{tag}.csv") };
                write_density_csv(&density_points(s, DENSITY_GRID)?, File::create(density_dir.join(name))?)?;
            }
            if let Some(s) = &c.whole_samples {
                write_density_csv(&density_points(s, DENSITY_GRID)?, File::create(density_dir.join(format!("{kind}_{tag}_whole.csv")))?)?;
            }
        }
    }
    if !plan.keep_samples {
        for c in &mut report.cells {
            c.samples = None;
            c.whole_samples = None;
        }
    }
    report.plan = plan;
    report.write_files(dir, &kind.to_string())?;
    match kind {
        StudyKind::Power => {
            write_power_table(&report, File::create(dir.join("power_table.csv"))?)?;
            write_all_significant_table(&report, &[1, 2, 3, 4, 5, 6], File::create(dir.join("all_significant.csv"))?)?;
        }
        _ => write_interval_table(&report, File::create(dir.join(format!("{kind}_table.csv")))?)?,
    }

    print_report(&report, out)?;
    writeln!(out, "wrote {}", dir.display())?;
    Ok(report)
}

fn print_report(report: &SimulationReport, out: &mut dyn Write) -> Result<()> {
    match report.kind {
        StudyKind::Power => {
            writeln!(out, "{:>6} {:>6} {:>10} {:>10}", "d", "N", "simulated", "analytic")?;
            for c in &report.cells {
                writeln!(
                    out,
                    "{:>6} {:>6} {:>10.4} {:>10.4}",
                    c.true_d,
                    c.n_total,
                    c.significant_fraction,
                    c.analytic_power.unwrap_or(f64::NAN)
                )?;
            }
        }
        StudyKind::Effects | StudyKind::Meta => {
            writeln!(out, "{:>6} {:>6} {:>6} {:>8} {:>8} {:>8}", "d", "N", "k", "2.5%", "mean", "97.5%")?;
            for c in &report.cells {
                let k = c.group_size.map_or("-".to_string(), |g| g.to_string());
                writeln!(
                    out,
                    "{:>6} {:>6} {:>6} {:>8.2} {:>8.2} {:>8.2}",
                    c.true_d, c.n_total, k, c.effect.lower, c.effect.mean, c.effect.upper
                )?;
            }
        }
        StudyKind::Chunks => {
            writeln!(out, "{:>6} {:>6} {:>10} {:>10} {:>12}", "d", "chunks", "joint", "whole", "mean |diff|")?;
            for c in &report.cells {
                writeln!(
                    out,
                    "{:>6} {:>6} {:>10.4} {:>10.4} {:>12.4}",
                    c.true_d,
                    c.chunks.unwrap_or(1),
                    c.effect.mean,
                    c.whole.map_or(f64::NAN, |w| w.mean),
                    c.mean_abs_diff.unwrap_or(f64::NAN)
                )?;
            }
        }
    }
    Ok(())
}

pub(crate) fn require_two(studies: &[StudyEffect], what: &str) -> Result<()> {
    if studies.len() < 2 {
        return Err(Error::insufficient(format!(
            "{what} needs at least two studies (k >= 2); the input has {}",
            studies.len()
        )));
    }
    Ok(())
}

pub(crate) fn write_forest(model: &ForestPlotModel, settings: &Settings, out: &mut dyn Write) -> Result<()> {
    let Some(format) = settings.forest else {
        return Ok(());
    };
    std::fs::create_dir_all(&settings.out)?;
    let path = match format {
        ForestFormat::Text => {
            let path = settings.out.join("forest.txt");
            std::fs::write(&path, render_forest_text(model, TEXT_FOREST_WIDTH)?)?;
            path
        }
        ForestFormat::Svg => {
            let path = settings.out.join("forest.svg");
            std::fs::write(&path, render_forest_svg(model))?;
            path
        }
    };
    writeln!(out, "forest plot: {}", path.display())?;
    Ok(())
}

pub(crate) fn describe_meta(meta: &MetaResult, out: &mut dyn Write) -> Result<()> {
    let pct = meta.ci_level * 100.0;
    let est = meta.heterogeneity.estimator.map_or(String::new(), |e| format!(" ({e})"));
    writeln!(out, "{}{est}, k = {}", meta.model, meta.k)?;
    let (z, p) = meta.joint_z_test();
    writeln!(
        out,
        "  joint d = {:.2}, {pct:.0}% CI ({:.2}, {:.2}), z = {z:.2}, p = {p:.4}",
        meta.joint_effect, meta.joint_ci.0, meta.joint_ci.1
    )?;
    if let Some((lo, hi)) = meta.prediction_interval {
        writeln!(out, "  prediction interval ({lo:.2}, {hi:.2})")?;
    }
    if meta.k > 1 {
        let h = &meta.heterogeneity;
        writeln!(
            out,
            "  I\u{b2} = {:.1}% ({:.1}%, {:.1}%), \u{3c4}\u{b2} = {:.4}, Q = {:.2} (df = {}), p = {:.4}",
            h.i2_percent, h.i2_ci.0, h.i2_ci.1, h.tau2, h.q, h.q_df, h.q_p
        )?;
    }
    let weights: Vec<String> = meta
        .per_study_weights
        .iter()
        .map(|w| format!("{} {:.1}%", w.label, w.weight_percent))
        .collect();
    writeln!(out, "  weights: {}", weights.join(", "))?;
    Ok(())
}

#[derive(Serialize)]
struct MetaOutput<'a> {
    random: &'a MetaResult,
    fixed: &'a MetaResult,
}

/// Analyzes one experiment (`experiment`, two-column raw scores) or a
/// studies file (`meta`, `subgroup`, `metareg`), prints a summary and writes
/// a JSON result (plus a forest plot on request) to the output directory.
pub fn cmd_analyze(kind: AnalyzeKind, input: &Path, settings: &Settings, out: &mut dyn Write) -> Result<()> {
    let dir = &settings.out;
    match kind {
        AnalyzeKind::Experiment => {
            let (control, treatment) = read_scores(input)?;
            let r = analyze_experiment(&control, &treatment, settings.ci_level)?;
            let pct = settings.ci_level * 100.0;
            writeln!(
                out,
                "control: n = {}, mean = {:.2}, sd = {:.2}",
                r.control.n, r.control.mean, r.control.sd
            )?;
            writeln!(
                out,
                "treatment: n = {}, mean = {:.2}, sd = {:.2}",
                r.treatment.n, r.treatment.mean, r.treatment.sd
            )?;
            writeln!(out, "t({}) = {:.3}, p = {:.4}", r.df, r.t_stat, r.p_value)?;
            writeln!(out, "d = {:.2}, {pct:.0}% CI ({:.2}, {:.2})", r.d, r.d_ci.0, r.d_ci.1)?;
            let alpha = settings.alpha();
            writeln!(
                out,
                "{} at alpha = {alpha}",
                if r.is_significant(alpha) { "significant" } else { "not significant" }
            )?;
            write_json(dir, "experiment.json", &r)?;
        }
        AnalyzeKind::Meta => {
            let file = StudiesFile::load(input)?;
            let studies = file.studies();
            require_two(&studies, "a meta-analysis")?;
            let random = random_effects(&studies, settings.estimator, settings.ci_level)?;
            let fixed = fixed_effect(&studies, settings.ci_level)?;
            describe_meta(&random, out)?;
            describe_meta(&fixed, out)?;
            write_json(dir, "meta.json", &MetaOutput { random: &random, fixed: &fixed })?;
            write_forest(&build_forest(&random), settings, out)?;
        }
        AnalyzeKind::Subgroup => {
            let file = StudiesFile::load(input)?;
            let by = settings.by.as_deref().unwrap_or("subgroup");
            let studies = file.studies_by(by)?;
            require_two(&studies, "a subgroup meta-analysis")?;
            let r = subgroup_meta(&studies, settings.estimator, settings.ci_level)?;
            for g in &r.groups {
                writeln!(out, "[{by} = {}]", g.name)?;
                describe_meta(&g.result, out)?;
            }
            writeln!(out, "[overall]")?;
            describe_meta(&r.overall, out)?;
            writeln!(
                out,
                "between groups: Q = {:.2} (df = {}), p = {:.4}",
                r.q_between, r.q_between_df, r.q_between_p
            )?;
            write_json(dir, "subgroup.json", &r)?;
            write_forest(&build_forest(&r), settings, out)?;
        }
        AnalyzeKind::Metareg => {
            let file = StudiesFile::load(input)?;
            let name = settings
                .moderator
                .as_deref()
                .ok_or_else(|| Error::input("metareg needs --moderator NAME (a moderator:NAME column)"))?;
            let studies = file.studies();
            require_two(&studies, "a meta-regression")?;
            let r = meta_regression(&studies, name, settings.estimator)?;
            writeln!(out, "meta-regression on '{name}' ({}), k = {}", r.estimator, r.k)?;
            writeln!(out, "  intercept = {:.4} (se {:.4})", r.intercept, r.intercept_se)?;
            writeln!(
                out,
                "  slope = {:.4} (se {:.4}), z = {:.2}, p = {:.4}",
                r.slope, r.slope_se, r.slope_z, r.slope_p
            )?;
            writeln!(out, "  residual \u{3c4}\u{b2} = {:.4}", r.tau2)?;
            write_json(dir, "metareg.json", &r)?;
        }
    }
    writeln!(out, "wrote {}", dir.display())?;
    Ok(())
}
