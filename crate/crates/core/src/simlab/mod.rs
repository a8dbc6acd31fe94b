//! Monte Carlo studies of replication variability: power curves, the
//! spread of estimated effect sizes, the spread of meta-analytic joint
//! effects over groups of replications, and large experiments compared
//! with meta-analyses of their chunks.
//!
//! Every replication draws from its own [`RandomStream`], indexed by a hash
//! of the cell and the replication number, so reports are bit-identical for
//! a given seed however the work is spread across threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{analyze_experiment, summarize, ExperimentResult, GroupSummary};
use crate::statdist::{sample_normal, RandomStream};

mod chunks;
mod output;
mod power;
mod variability;

pub use chunks::{chunk_comparison, chunk_comparison_with};
pub use output::{CellSummary, Distribution, SimulationReport};
pub use power::{analytic_power, power_curve, prob_all_significant};
pub use variability::{effect_variability, meta_variability};

/// Seed used when a plan does not name one.
pub const DEFAULT_SEED: u64 = 20_231_017;

/// Two normal populations sharing one standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub mu_control: f64,
    pub mu_treatment: f64,
    pub sigma: f64,
}

impl PopulationSpec {
    pub fn new(mu_control: f64, mu_treatment: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::input(format!("population sigma must be positive, got {sigma}")));
        }
        if !mu_control.is_finite() || !mu_treatment.is_finite() {
            return Err(Error::input("population means must be finite"));
        }
        Ok(Self {
            mu_control,
            mu_treatment,
            sigma,
        })
    }

    /// Populations `N(mu_control, σ²)` and `N(mu_control + d·σ, σ²)`.
    pub fn with_effect(true_d: f64, mu_control: f64, sigma: f64) -> Result<Self> {
        Self::new(mu_control, mu_control + true_d * sigma, sigma)
    }

    pub fn true_d(&self) -> f64 {
        (self.mu_treatment - self.mu_control) / self.sigma
    }
}

/// Which study a report comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Power,
    Effects,
    Meta,
    Chunks,
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Power => "power",
            StudyKind::Effects => "effects",
            StudyKind::Meta => "meta",
            StudyKind::Chunks => "chunks",
        })
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(StudyKind::Power),
            "effects" => Ok(StudyKind::Effects),
            "meta" => Ok(StudyKind::Meta),
            "chunks" => Ok(StudyKind::Chunks),
            other => Err(Error::input(format!(
                "unknown study '{other}' (expected power, effects, meta or chunks)"
            ))),
        }
    }
}

/// Grid and replication settings shared by all studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationPlan {
    pub true_d_grid: Vec<f64>,
    /// Total subjects per experiment, split evenly between the arms.
    pub n_total_grid: Vec<usize>,
    /// Replications per meta-analysis.
    pub group_size_grid: Vec<usize>,
    pub n_sims: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub mu_control: f64,
    pub sigma: f64,
    pub chunk_counts: Vec<usize>,
    pub chunk_total_n: usize,
    /// Keep every replication's estimate in the report (for density plots).
    pub keep_samples: bool,
    /// Thread count; `None` uses rayon's global pool. Never echoed in reports.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        Self {
            true_d_grid: vec![0.2, 0.5, 0.8],
            n_total_grid: (4..=148).step_by(16).collect(),
            group_size_grid: (1..=12).collect(),
            n_sims: 5000,
            alpha: 0.05,
            master_seed: DEFAULT_SEED,
            mu_control: 50.0,
            sigma: 10.0,
            chunk_counts: vec![4, 8, 12],
            chunk_total_n: 144,
            keep_samples: false,
            workers: None,
        }
    }
}

impl SimulationPlan {
    /// Defaults for the meta-analysis study: per-experiment sizes 4, 36, 100.
    pub fn meta_default() -> Self {
        Self {
            n_total_grid: vec![4, 36, 100],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::input("n_sims must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::input(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.true_d_grid.is_empty() || self.true_d_grid.iter().any(|d| !d.is_finite()) {
            return Err(Error::input("true_d_grid must hold finite values"));
        }
        if self.n_total_grid.is_empty() {
            return Err(Error::input("n_total_grid must not be empty"));
        }
        for &n in &self.n_total_grid {
            check_n_total(n)?;
        }
        if self.group_size_grid.contains(&0) {
            return Err(Error::input("group sizes must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::input("workers must be at least 1"));
        }
        PopulationSpec::new(self.mu_control, self.mu_control, self.sigma)?;
        Ok(())
    }

    pub fn population(&self, true_d: f64) -> Result<PopulationSpec> {
        PopulationSpec::with_effect(true_d, self.mu_control, self.sigma)
    }
}

fn check_n_total(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::input(format!(
            "sample size {n} must be even and at least 4 (subjects are split evenly between arms)"
        )));
    }
    Ok(())
}

/// Draws `n_total/2` subjects per arm (control first) and analyzes them.
pub fn simulate_experiment(pop: &PopulationSpec, n_total: usize, stream: &mut RandomStream) -> Result<ExperimentResult> {
    check_n_total(n_total)?;
    let per_arm = n_total / 2;
    let control = draw(stream, pop.mu_control, pop.sigma, per_arm)?;
    let treatment = draw(stream, pop.mu_treatment, pop.sigma, per_arm)?;
    analyze_experiment(&control, &treatment, 0.95)
}

fn draw(stream: &mut RandomStream, mu: f64, sigma: f64, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| sample_normal(stream, mu, sigma)).collect()
}

/// Arm summaries of one simulated experiment; same draws as
/// [`simulate_experiment`].
pub(crate) fn simulate_arms(pop: &PopulationSpec, per_arm: usize, stream: &mut RandomStream) -> Result<(GroupSummary, GroupSummary)> {
    let control = draw(stream, pop.mu_control, pop.sigma, per_arm)?;
    let treatment = draw(stream, pop.mu_treatment, pop.sigma, per_arm)?;
    Ok((summarize(&control)?, summarize(&treatment)?))
}

/// Identifies a simulation cell for stream derivation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CellKey {
    pub tag: u8,
    pub true_d: f64,
    pub n_total: usize,
    pub group_size: usize,
}

impl CellKey {
    /// FNV-1a over the key fields; stable across platforms and releases.
    pub fn hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(&[self.tag]);
        feed(&self.true_d.to_bits().to_le_bytes());
        feed(&(self.n_total as u64).to_le_bytes());
        feed(&(self.group_size as u64).to_le_bytes());
        h
    }

    pub fn stream(&self, plan: &SimulationPlan, replication: usize) -> RandomStream {
        let index = self
            .hash()
            .wrapping_mul(plan.n_sims as u64)
            .wrapping_add(replication as u64);
        RandomStream::new(plan.master_seed, index)
    }
}

/// Runs `f` for replications `0..n_sims` on the plan's worker pool and
/// returns the results in replication order.
pub(crate) fn replicate<T, F>(plan: &SimulationPlan, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let run = || (0..plan.n_sims).into_par_iter().map(&f).collect::<Vec<T>>();
    match plan.workers {
        None => Ok(run()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::input(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Empirical quantile, interpolation type 7 (`h = (n−1)p`). `sorted` must be
/// ascending and nonempty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
