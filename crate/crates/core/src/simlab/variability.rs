use super::output::{CellSummary, Distribution, SimulationReport};
use super::power::analytic_power;
use super::{replicate, simulate_arms, CellKey, SimulationPlan, StudyKind};
use crate::error::{Error, Result};
use crate::experiment::{analyze_summaries, cohens_d, d_variance};
use crate::meta::pooling::random_joint;
use crate::meta::Tau2Estimator;
use crate::statdist::norm_cdf;

// Stream tags. Power and effect studies share simulated experiments.
pub(crate) const TAG_EXPERIMENT: u8 = 1;
pub(crate) const TAG_META: u8 = 2;
pub(crate) const TAG_CHUNKS: u8 = 3;

/// Distribution of estimated d per `(true_d, n_total)` cell.
pub fn effect_variability(plan: &SimulationPlan) -> Result<SimulationReport> {
    experiment_cells(plan, StudyKind::Effects)
}

pub(crate) fn experiment_cells(plan: &SimulationPlan, kind: StudyKind) -> Result<SimulationReport> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &true_d in &plan.true_d_grid {
        let pop = plan.population(true_d)?;
        for &n_total in &plan.n_total_grid {
            let key = CellKey {
                tag: TAG_EXPERIMENT,
                true_d,
                n_total,
                group_size: 0,
            };
            let runs = replicate(plan, |j| -> Result<(f64, bool)> {
                let mut stream = key.stream(plan, j);
                let (c, t) = simulate_arms(&pop, n_total / 2, &mut stream)?;
                let r = analyze_summaries(c, t, 0.95)?;
                Ok((r.d, r.is_significant(plan.alpha)))
            })?;
            let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
            let d: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let sig = runs.iter().filter(|r| r.1).count();
            cells.push(CellSummary {
                true_d,
                n_total,
                group_size: None,
                chunks: None,
                replications: d.len(),
                failures: 0,
                significant_fraction: sig as f64 / d.len() as f64,
                analytic_power: Some(analytic_power(true_d, n_total, plan.alpha)?),
                effect: Distribution::from_samples(&d)?,
                whole: None,
                mean_abs_diff: None,
                samples: plan.keep_samples.then_some(d),
                whole_samples: None,
            });
        }
    }
    Ok(SimulationReport {
        kind,
        master_seed: plan.master_seed,
        estimator: None,
        chunk_estimator: None,
        plan: plan.clone(),
        cells,
    })
}

/// Share of a cell's replications allowed to fail before the cell aborts.
pub(crate) const MAX_FAILURE_RATE: f64 = 0.01;

pub(crate) fn check_failures(cell: String, failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::EstimatorFailures { cell, failed, total });
    }
    Ok(())
}

/// Distribution of the random-effects joint effect over groups of
/// `group_size` replications, per `(true_d, n_total, group_size)` cell.
///
/// Replications whose τ² estimate fails are counted and left out; a cell
/// aborts when more than 1% fail.
pub fn meta_variability(plan: &SimulationPlan, estimator: Tau2Estimator) -> Result<SimulationReport> {
    plan.validate()?;
    if plan.group_size_grid.is_empty() {
        return Err(Error::input("group_size_grid must not be empty for the meta study"));
    }
    let mut cells = Vec::new();
    for &true_d in &plan.true_d_grid {
        let pop = plan.population(true_d)?;
        for &n_total in &plan.n_total_grid {
            let per_arm = n_total / 2;
            for &group_size in &plan.group_size_grid {
                let key = CellKey {
                    tag: TAG_META,
                    true_d,
                    n_total,
                    group_size,
                };
                let runs = replicate(plan, |j| -> Result<Option<(f64, bool)>> {
                    let mut stream = key.stream(plan, j);
                    let mut y = Vec::with_capacity(group_size);
                    let mut v = Vec::with_capacity(group_size);
                    for _ in 0..group_size {
                        let (c, t) = simulate_arms(&pop, per_arm, &mut stream)?;
                        let d = cohens_d(&c, &t)?;
                        y.push(d);
                        v.push(d_variance(d, c.n, t.n)?);
                    }
                    Ok(match random_joint(&y, &v, estimator) {
                        Ok((joint, se, _)) => {
                            let p = 2.0 * norm_cdf(-(joint / se).abs())?;
                            Some((joint, p < plan.alpha))
                        }
                        Err(Error::Convergence(_)) => None,
                        Err(e) => return Err(e),
                    })
                })?;
                let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
                let failures = runs.iter().filter(|r| r.is_none()).count();
                check_failures(format!("d={true_d}, n={n_total}, k={group_size}"), failures, plan.n_sims)?;
                let ok: Vec<(f64, bool)> = runs.into_iter().flatten().collect();
                let joints: Vec<f64> = ok.iter().map(|r| r.0).collect();
                let sig = ok.iter().filter(|r| r.1).count();
                cells.push(CellSummary {
                    true_d,
                    n_total,
                    group_size: Some(group_size),
                    chunks: None,
                    replications: joints.len(),
                    failures,
                    significant_fraction: sig as f64 / joints.len() as f64,
                    analytic_power: None,
                    effect: Distribution::from_samples(&joints)?,
                    whole: None,
                    mean_abs_diff: None,
                    samples: plan.keep_samples.then_some(joints),
                    whole_samples: None,
                });
            }
        }
    }
    Ok(SimulationReport {
        kind: StudyKind::Meta,
        master_seed: plan.master_seed,
        estimator: Some(estimator),
        chunk_estimator: None,
        plan: plan.clone(),
        cells,
    })
}
