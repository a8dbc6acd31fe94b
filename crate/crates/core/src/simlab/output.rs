use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{quantile_type7, SimulationPlan, StudyKind};
use crate::error::{Error, Result};
use crate::meta::Tau2Estimator;

/// Mean, sd and 2.5% / 50% / 97.5% quantiles of a set of estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

impl Distribution {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::insufficient("no samples to summarize"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let sd = if samples.len() > 1 {
            (samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean,
            sd,
            lower: quantile_type7(&sorted, 0.025),
            median: quantile_type7(&sorted, 0.5),
            upper: quantile_type7(&sorted, 0.975),
        })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Aggregated result of one simulation cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub true_d: f64,
    pub n_total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunks: Option<usize>,
    /// Replications that produced an estimate.
    pub replications: usize,
    pub failures: usize,
    /// Share of replications with p < alpha (the joint z-test for pooled cells).
    pub significant_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_power: Option<f64>,
    /// Estimated d, or the joint effect for pooled cells.
    pub effect: Distribution,
    /// Whole-sample d of the chunked datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whole: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_abs_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whole_samples: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub kind: StudyKind,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Tau2Estimator>,
    /// Pooling of chunk estimates: `None` for the fixed-effect model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_estimator: Option<Tau2Estimator>,
    pub plan: SimulationPlan,
    pub cells: Vec<CellSummary>,
}

const CSV_HEADER: [&str; 20] = [
    "kind",
    "true_d",
    "n_total",
    "group_size",
    "chunks",
    "replications",
    "failures",
    "significant_fraction",
    "analytic_power",
    "mean",
    "sd",
    "lower_2_5",
    "median",
    "upper_97_5",
    "whole_mean",
    "whole_sd",
    "whole_lower_2_5",
    "whole_median",
    "whole_upper_97_5",
    "mean_abs_diff",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SimulationReport {
    /// The cell for `(true_d, n_total)` and, where relevant, a group size or
    /// chunk count.
    pub fn cell(&self, true_d: f64, n_total: usize, group_or_chunks: Option<usize>) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.true_d == true_d && c.n_total == n_total && (group_or_chunks.is_none() || c.group_size.or(c.chunks) == group_or_chunks)
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per cell; sample vectors are left out.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for c in &self.cells {
            let e = &c.effect;
            let wh = c.whole.as_ref();
            w.write_record([
                self.kind.to_string(),
                c.true_d.to_string(),
                c.n_total.to_string(),
                opt(c.group_size),
                opt(c.chunks),
                c.replications.to_string(),
                c.failures.to_string(),
                c.significant_fraction.to_string(),
                opt(c.analytic_power),
                e.mean.to_string(),
                e.sd.to_string(),
                e.lower.to_string(),
                e.median.to_string(),
                e.upper.to_string(),
                opt(wh.map(|d| d.mean)),
                opt(wh.map(|d| d.sd)),
                opt(wh.map(|d| d.lower)),
                opt(wh.map(|d| d.median)),
                opt(wh.map(|d| d.upper)),
                opt(c.mean_abs_diff),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::input(e.to_string()))
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json()?)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)
    }
}
