use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ForestFormat, Options};
use crate::error::{Error, Result};
use crate::meta::Tau2Estimator;
use crate::simlab::{SimulationPlan, StudyKind};

/// Contents of a `--config` JSON file. Unknown keys are rejected, at the
/// top level and inside `plan`.
///
/// ```json
/// {
///   "plan": { "n_sims": 5000, "true_d_grid": [0.2, 0.5, 0.8] },
///   "seed": 7,
///   "estimator": "reml",
///   "out": "results"
/// }
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Partial plan; missing fields take the study's defaults.
    pub plan: Option<Value>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub estimator: Option<Tau2Estimator>,
    /// Random-effects pooling of chunks instead of the fixed-effect model.
    pub chunk_estimator: Option<Tau2Estimator>,
    pub ci_level: Option<f64>,
    pub alpha: Option<f64>,
    pub out: Option<PathBuf>,
    pub forest: Option<ForestFormat>,
    pub by: Option<String>,
    pub moderator: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::input(format!("config {}: {e}", path.display())))
    }

    /// The plan for `kind`: study defaults overlaid with the config's fields.
    pub fn plan_for(&self, kind: StudyKind) -> Result<SimulationPlan> {
        let base = match kind {
            StudyKind::Meta => SimulationPlan::meta_default(),
            _ => SimulationPlan::default(),
        };
        let Some(overlay) = &self.plan else {
            return Ok(base);
        };
        let Value::Object(fields) = overlay else {
            return Err(Error::input("config: \"plan\" must be a JSON object"));
        };
        let mut merged = serde_json::to_value(&base)?;
        if let Value::Object(target) = &mut merged {
            for (k, v) in fields {
                target.insert(k.clone(), v.clone());
            }
        }
        serde_json::from_value(merged).map_err(|e| Error::input(format!("config plan: {e}")))
    }
}

/// Analysis and simulation settings after merging defaults, the config file
/// and command-line flags (flags win).
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub estimator: Tau2Estimator,
    pub chunk_estimator: Option<Tau2Estimator>,
    pub ci_level: f64,
    pub alpha: Option<f64>,
    pub out: PathBuf,
    pub forest: Option<ForestFormat>,
    pub by: Option<String>,
    pub moderator: Option<String>,
}

pub const DEFAULT_OUT: &str = "replimeta-out";

impl Settings {
    pub fn resolve(opts: &Options) -> Result<Self> {
        let config = match &opts.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let ci_level = opts.ci_level.or(config.ci_level).unwrap_or(0.95);
        if !(ci_level > 0.0 && ci_level < 1.0) {
            return Err(Error::input(format!("--ci-level must lie in (0,1), got {ci_level}")));
        }
        let alpha = opts.alpha.or(config.alpha);
        if let Some(a) = alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::input(format!("--alpha must lie in (0,1), got {a}")));
            }
        }
        let workers = opts.workers.or(config.workers);
        if workers == Some(0) {
            return Err(Error::input("--workers must be at least 1"));
        }
        Ok(Self {
            seed: opts.seed.or(config.seed),
            workers,
            estimator: opts.estimator.or(config.estimator).unwrap_or_default(),
            chunk_estimator: config.chunk_estimator,
            ci_level,
            alpha,
            out: opts.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into()),
            forest: opts.forest.or(config.forest),
            by: opts.by.clone().or_else(|| config.by.clone()),
            moderator: opts.moderator.clone().or_else(|| config.moderator.clone()),
            config,
        })
    }

    /// Plan with the seed, alpha and worker overrides applied.
    pub fn plan(&self, kind: StudyKind) -> Result<SimulationPlan> {
        let mut plan = self.config.plan_for(kind)?;
        if let Some(seed) = self.seed {
            plan.master_seed = seed;
        }
        if let Some(alpha) = self.alpha {
            plan.alpha = alpha;
        }
        plan.workers = self.workers;
        plan.validate()?;
        Ok(plan)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.05)
    }
}
