//! Kernel density curve of the d estimates in one simulation cell, as CSV.
//!
//! `cargo run --release --example density > density.csv`

use replimeta::report::{density_points, write_density_csv};
use replimeta::simlab::{effect_variability, SimulationPlan};

fn main() -> replimeta::Result<()> {
    let plan = SimulationPlan {
        true_d_grid: vec![0.5],
        n_total_grid: vec![20],
        keep_samples: true,
        ..SimulationPlan::default()
    };
    let report = effect_variability(&plan)?;
    let samples = report.cells[0].samples.as_deref().unwrap_or_default();
    write_density_csv(&density_points(samples, 200)?, std::io::stdout().lock())
}
