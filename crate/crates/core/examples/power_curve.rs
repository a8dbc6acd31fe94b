//! Share of significant replications against sample size, next to the
//! analytic power, and the chance that several replications all agree.
//!
//! `cargo run --release --example power_curve [n_sims]`

use replimeta::simlab::{power_curve, prob_all_significant, SimulationPlan};

fn main() -> replimeta::Result<()> {
    let n_sims = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5000);
    let plan = SimulationPlan {
        n_sims,
        ..SimulationPlan::default()
    };
    let report = power_curve(&plan)?;

    println!("{:>5} {:>5} {:>10} {:>10}", "d", "N", "simulated", "analytic");
    for c in &report.cells {
        println!(
            "{:>5} {:>5} {:>10.4} {:>10.4}",
            c.true_d,
            c.n_total,
            c.significant_fraction,
            c.analytic_power.unwrap_or(f64::NAN)
        );
    }

    let power = report.cell(0.8, 20, None).map_or(0.35, |c| c.significant_fraction);
    for k in 1..=4 {
        println!("P(all {k} significant | power {power:.3}) = {:.4}", prob_all_significant(power, k)?);
    }
    Ok(())
}
