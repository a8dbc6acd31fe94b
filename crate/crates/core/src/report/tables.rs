//! CSV tables in the layout of the published result tables.

use std::io::Write;

use crate::error::Result;
use crate::simlab::{prob_all_significant, SimulationReport, StudyKind};

/// `true_d, size, lower_2_5, mean, upper_97_5`, one row per cell. `size` is
/// the group size for meta studies, the chunk count for chunk studies and the
/// total sample size otherwise.
pub fn write_interval_table<W: Write>(report: &SimulationReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let size_col = match report.kind {
        StudyKind::Meta => "group_size",
        StudyKind::Chunks => "chunks",
        _ => "sample_size",
    };
    let mut header = vec!["true_d", "n_total", size_col, "lower_2_5", "mean", "upper_97_5"];
    if report.kind == StudyKind::Chunks {
        header.extend(["whole_lower_2_5", "whole_mean", "whole_upper_97_5"]);
    }
    w.write_record(&header)?;
    for c in &report.cells {
        let size = c.group_size.or(c.chunks).unwrap_or(c.n_total);
        let e = c.effect;
        let mut rec = vec![
            format!("{}", c.true_d),
            c.n_total.to_string(),
            size.to_string(),
            format!("{:.2}", e.lower),
            format!("{:.2}", e.mean),
            format!("{:.2}", e.upper),
        ];
        if let Some(wh) = c.whole {
            rec.extend([format!("{:.2}", wh.lower), format!("{:.2}", wh.mean), format!("{:.2}", wh.upper)]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `true_d, n_total, simulated, analytic`: share of significant results.
pub fn write_power_table<W: Write>(report: &SimulationReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["true_d", "n_total", "simulated_power", "analytic_power"])?;
    for c in &report.cells {
        w.write_record([
            c.true_d.to_string(),
            c.n_total.to_string(),
            format!("{:.4}", c.significant_fraction),
            c.analytic_power.map(|p| format!("{p:.4}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Probability that every one of `k` replications is significant, from the
/// simulated power of each cell: `true_d, n_total, k, probability`.
pub fn write_all_significant_table<W: Write>(report: &SimulationReport, ks: &[usize], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["true_d", "n_total", "k", "probability"])?;
    for c in &report.cells {
        for &k in ks {
            w.write_record([
                c.true_d.to_string(),
                c.n_total.to_string(),
                k.to_string(),
                format!("{:.4}", prob_all_significant(c.significant_fraction, k)?),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Two-column `x, density` curve.
pub fn write_density_csv<W: Write>(points: &[(f64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "density"])?;
    for (x, d) in points {
        w.write_record([x.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::{effect_variability, SimulationPlan};

    #[test]
    fn interval_table_layout() {
        let plan = SimulationPlan {
            true_d_grid: vec![0.5],
            n_total_grid: vec![20, 36],
            n_sims: 200,
            ..SimulationPlan::default()
        };
        let r = effect_variability(&plan).unwrap();
        let mut buf = Vec::new();
        write_interval_table(&r, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "true_d,n_total,sample_size,lower_2_5,mean,upper_97_5");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.5,20,20,"));

        let mut buf = Vec::new();
        write_all_significant_table(&r, &[1, 2], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
