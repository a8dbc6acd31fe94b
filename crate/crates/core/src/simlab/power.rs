use super::{check_n_total, variability::experiment_cells, SimulationPlan, SimulationReport, StudyKind};
use crate::error::{Error, Result};
use crate::statdist::{noncentral_t_cdf, t_quantile};

/// Fraction of simulated experiments with p < alpha for every
/// `(true_d, n_total)` cell, alongside the analytic power.
pub fn power_curve(plan: &SimulationPlan) -> Result<SimulationReport> {
    experiment_cells(plan, StudyKind::Power)
}

/// Exact two-sided power of the pooled t-test with `n_total/2` subjects per
/// arm: noncentral t with `df = n_total − 2` and `ncp = d·√(n_total/4)`.
pub fn analytic_power(true_d: f64, n_total: usize, alpha: f64) -> Result<f64> {
    check_n_total(n_total)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !true_d.is_finite() {
        return Err(Error::domain("true effect must be finite"));
    }
    let df = (n_total - 2) as f64;
    let ncp = true_d * (n_total as f64 / 4.0).sqrt();
    let crit = t_quantile(1.0 - alpha / 2.0, df)?;
    if true_d == 0.0 {
        return Ok(alpha);
    }
    let upper = 1.0 - noncentral_t_cdf(crit, df, ncp)?;
    let lower = noncentral_t_cdf(-crit, df, ncp)?;
    Ok((upper + lower).clamp(0.0, 1.0))
}

/// Probability that `k` independent replications are all significant,
/// `power^k`.
pub fn prob_all_significant(power: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&power) {
        return Err(Error::domain(format!("power must lie in [0,1], got {power}")));
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    Ok(power.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statdist::{norm_quantile, RandomStream};

    #[test]
    fn null_power_is_alpha() {
        for n in [4, 20, 148] {
            assert_eq!(analytic_power(0.0, n, 0.05).unwrap(), 0.05);
        }
    }

    #[test]
    fn large_ncp_power() {
        assert!(analytic_power(0.8, 148, 0.05).unwrap() > 0.99);
    }

    #[test]
    fn power_matches_monte_carlo_oracle() {
        // independent oracle: direct t statistics from normal draws
        let (n_arm, d) = (18usize, 0.5);
        let crit = t_quantile(0.975, (2 * n_arm - 2) as f64).unwrap();
        let mut rng = RandomStream::new(99, 0);
        let mut z = || norm_quantile(rng.next_uniform()).unwrap();
        let sims = 200_000;
        let mut hits = 0usize;
        for _ in 0..sims {
            let a: Vec<f64> = (0..n_arm).map(|_| z()).collect();
            let b: Vec<f64> = (0..n_arm).map(|_| z() + d).collect();
            let ma = a.iter().sum::<f64>() / n_arm as f64;
            let mb = b.iter().sum::<f64>() / n_arm as f64;
            let ss: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
            let sp = (ss / (2 * n_arm - 2) as f64).sqrt();
            let t = (mb - ma) / (sp * (2.0 / n_arm as f64).sqrt());
            if t.abs() > crit {
                hits += 1;
            }
        }
        let mc = hits as f64 / sims as f64;
        let exact = analytic_power(d, 2 * n_arm, 0.05).unwrap();
        assert!((mc - exact).abs() < 4.0 * (exact * (1.0 - exact) / sims as f64).sqrt(), "{mc} vs {exact}");
    }

    #[test]
    fn all_significant() {
        assert!((prob_all_significant(0.35, 2).unwrap() - 0.1225).abs() < 1e-15);
        assert!((prob_all_significant(0.35, 3).unwrap() - 0.042875).abs() < 1e-15);
        assert_eq!(prob_all_significant(1.0, 7).unwrap(), 1.0);
        assert!(prob_all_significant(1.2, 2).is_err());
        assert!(prob_all_significant(0.5, 0).is_err());
    }
}
