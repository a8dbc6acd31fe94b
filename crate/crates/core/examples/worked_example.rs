//! Two-arm experiment from summary statistics: t-test, Cohen's d and its CI.
//!
//! `cargo run --example worked_example`

use replimeta::experiment::{analyze_summaries, GroupSummary};

fn main() -> replimeta::Result<()> {
    let control = GroupSummary::new(20, 51.42, 9.73)?;
    let treatment = GroupSummary::new(20, 57.49, 8.30)?;
    let r = analyze_summaries(control, treatment, 0.95)?;

    println!("t({}) = {:.3}, p = {:.4}", r.df, r.t_stat, r.p_value);
    println!("d = {:.2}, 95% CI ({:.2}, {:.2}), var(d) = {:.4}", r.d, r.d_ci.0, r.d_ci.1, r.d_var);
    println!("significant at 0.05: {}", r.is_significant(0.05));
    Ok(())
}
