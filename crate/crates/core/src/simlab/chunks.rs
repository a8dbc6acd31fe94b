use super::output::{CellSummary, Distribution, SimulationReport};
use super::variability::{check_failures, TAG_CHUNKS};
use super::{draw, replicate, CellKey, SimulationPlan, StudyKind};
use crate::error::{Error, Result};
use crate::experiment::{cohens_d, d_variance, summarize};
use crate::meta::pooling::{pool, random_joint};
use crate::meta::Tau2Estimator;
use crate::statdist::norm_cdf;

/// One large experiment of `total_n` subjects against a fixed-effect
/// meta-analysis of the same subjects cut into equal chunks.
pub fn chunk_comparison(plan: &SimulationPlan, chunk_counts: &[usize], total_n: usize) -> Result<SimulationReport> {
    chunk_comparison_with(plan, chunk_counts, total_n, None)
}

/// As [`chunk_comparison`]; `Some(estimator)` pools chunks with the
/// random-effects model instead.
///
/// Every chunk count sees the same simulated datasets, so the whole-sample
/// distribution is shared and the comparison is paired per dataset.
pub fn chunk_comparison_with(
    plan: &SimulationPlan,
    chunk_counts: &[usize],
    total_n: usize,
    random: Option<Tau2Estimator>,
) -> Result<SimulationReport> {
    plan.validate()?;
    if chunk_counts.is_empty() {
        return Err(Error::input("at least one chunk count is required"));
    }
    for &c in chunk_counts {
        if c == 0 || total_n % (2 * c) != 0 || total_n / (2 * c) < 2 {
            return Err(Error::input(format!(
                "total sample size {total_n} cannot be split into {c} chunks of equal, even size with at least 2 subjects per arm"
            )));
        }
    }
    let per_arm = total_n / 2;
    let mut cells = Vec::new();
    for &true_d in &plan.true_d_grid {
        let pop = plan.population(true_d)?;
        let key = CellKey {
            tag: TAG_CHUNKS,
            true_d,
            n_total: total_n,
            group_size: 0,
        };
        // per dataset: whole d, then (joint, significant) per chunk count or None on failure
        let runs = replicate(plan, |j| -> Result<(f64, Vec<Option<(f64, bool)>>)> {
            let mut stream = key.stream(plan, j);
            let control = draw(&mut stream, pop.mu_control, pop.sigma, per_arm)?;
            let treatment = draw(&mut stream, pop.mu_treatment, pop.sigma, per_arm)?;
            let whole = cohens_d(&summarize(&control)?, &summarize(&treatment)?)?;
            let mut joints = Vec::with_capacity(chunk_counts.len());
            for &c in chunk_counts {
                let m = per_arm / c;
                let mut y = Vec::with_capacity(c);
                let mut v = Vec::with_capacity(c);
                for i in 0..c {
                    let gc = summarize(&control[i * m..(i + 1) * m])?;
                    let gt = summarize(&treatment[i * m..(i + 1) * m])?;
                    let d = cohens_d(&gc, &gt)?;
                    y.push(d);
                    v.push(d_variance(d, m, m)?);
                }
                let fit = match random {
                    None => {
                        let p = pool(&y, &v, 0.0);
                        Ok((p.joint, p.se, 0.0))
                    }
                    Some(est) => random_joint(&y, &v, est),
                };
                joints.push(match fit {
                    Ok((joint, se, _)) => Some((joint, 2.0 * norm_cdf(-(joint / se).abs())? < plan.alpha)),
                    Err(Error::Convergence(_)) => None,
                    Err(e) => return Err(e),
                });
            }
            Ok((whole, joints))
        })?;
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

        for (ci, &c) in chunk_counts.iter().enumerate() {
            let mut whole = Vec::with_capacity(runs.len());
            let mut joint = Vec::with_capacity(runs.len());
            let mut sig = 0usize;
            for (w, js) in &runs {
                if let Some((jv, s)) = js[ci] {
                    whole.push(*w);
                    joint.push(jv);
                    sig += usize::from(s);
                }
            }
            let failures = runs.len() - joint.len();
            check_failures(format!("d={true_d}, N={total_n}, chunks={c}"), failures, plan.n_sims)?;
            let mean_abs_diff = whole.iter().zip(&joint).map(|(a, b)| (a - b).abs()).sum::<f64>() / joint.len() as f64;
            cells.push(CellSummary {
                true_d,
                n_total: total_n,
                group_size: None,
                chunks: Some(c),
                replications: joint.len(),
                failures,
                significant_fraction: sig as f64 / joint.len() as f64,
                analytic_power: None,
                effect: Distribution::from_samples(&joint)?,
                whole: Some(Distribution::from_samples(&whole)?),
                mean_abs_diff: Some(mean_abs_diff),
                samples: plan.keep_samples.then(|| joint.clone()),
                whole_samples: plan.keep_samples.then_some(whole),
            });
        }
    }
    Ok(SimulationReport {
        kind: StudyKind::Chunks,
        master_seed: plan.master_seed,
        estimator: None,
        chunk_estimator: random,
        plan: plan.clone(),
        cells,
    })
}
