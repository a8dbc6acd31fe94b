//! Spread of Cohen's d across exact replications, as 95% intervals per
//! sample size.
//!
//! `cargo run --release --example effect_variability`

use replimeta::report::write_interval_table;
use replimeta::simlab::{effect_variability, SimulationPlan};

fn main() -> replimeta::Result<()> {
    let plan = SimulationPlan {
        n_total_grid: vec![4, 20, 52, 100, 148],
        ..SimulationPlan::default()
    };
    let report = effect_variability(&plan)?;
    write_interval_table(&report, std::io::stdout().lock())?;

    let wide = report.cell(0.5, 20, None).expect("cell in grid");
    println!(
        "\nd = 0.5, N = 20: {:.0}% of replications significant, estimates from {:.2} to {:.2}",
        wide.significant_fraction * 100.0,
        wide.effect.lower,
        wide.effect.upper
    );
    Ok(())
}
