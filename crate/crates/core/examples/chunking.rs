//! One large experiment analyzed whole and as a fixed-effect meta-analysis
//! of equal chunks of the same subjects.
//!
//! `cargo run --release --example chunking`

use replimeta::simlab::{chunk_comparison, SimulationPlan};

fn main() -> replimeta::Result<()> {
    let plan = SimulationPlan::default();
    let report = chunk_comparison(&plan, &[4, 8, 12], 144)?;

    println!("{:>5} {:>7} {:>8} {:>8} {:>12}", "d", "chunks", "joint", "whole", "mean |diff|");
    for c in &report.cells {
        println!(
            "{:>5} {:>7} {:>8.4} {:>8.4} {:>12.4}",
            c.true_d,
            c.chunks.unwrap_or(1),
            c.effect.mean,
            c.whole.map_or(f64::NAN, |w| w.mean),
            c.mean_abs_diff.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
