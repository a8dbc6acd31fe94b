//! Analysis of one two-arm between-subjects experiment: group summaries,
//! pooled-variance Student t-test and Cohen's d with its large-sample
//! variance and normal-approximation confidence interval.
//!
//! Sign convention: the first group is the control, the second the
//! treatment; a positive d means the treatment scored higher.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statdist::{norm_quantile, t_sf};

/// Descriptive statistics of one arm. `sd` uses the n−1 divisor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
}

impl GroupSummary {
    pub fn new(n: usize, mean: f64, sd: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::insufficient(format!("a group needs at least 2 subjects, got {n}")));
        }
        if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
            return Err(Error::input(format!("invalid group summary (mean={mean}, sd={sd})")));
        }
        Ok(Self {
            n,
            mean,
            sd,
            median: None,
        })
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }
}

/// Sample mean, n−1 standard deviation and median of one arm.
pub fn summarize(scores: &[f64]) -> Result<GroupSummary> {
    if scores.len() < 2 {
        return Err(Error::insufficient(format!(
            "a group needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|x| !x.is_finite()) {
        return Err(Error::input(format!("non-finite score {bad}")));
    }
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let ss: f64 = scores.iter().map(|x| (x - mean) * (x - mean)).sum();
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(GroupSummary {
        n,
        mean,
        sd: (ss / (n - 1) as f64).sqrt(),
        median: Some(median),
    })
}

/// Pooled within-group standard deviation.
pub fn pooled_sd(g1: &GroupSummary, g2: &GroupSummary) -> Result<f64> {
    let df = g1.n + g2.n;
    if df <= 2 {
        return Err(Error::domain("pooled sd needs n1 + n2 > 2"));
    }
    let ss = (g1.n - 1) as f64 * g1.variance() + (g2.n - 1) as f64 * g2.variance();
    Ok((ss / (df - 2) as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided pooled-variance Student t-test of `g2` against `g1`.
pub fn student_t_test(g1: &GroupSummary, g2: &GroupSummary) -> Result<TTest> {
    let sp = pooled_sd(g1, g2)?;
    let df = (g1.n + g2.n - 2) as f64;
    let diff = g2.mean - g1.mean;
    if sp == 0.0 {
        if diff == 0.0 {
            return Ok(TTest {
                t_stat: 0.0,
                df,
                p_value: 1.0,
            });
        }
        return Err(Error::DegenerateVariance(
            "both arms have zero variance but different means".into(),
        ));
    }
    let se = sp * (1.0 / g1.n as f64 + 1.0 / g2.n as f64).sqrt();
    let t_stat = diff / se;
    let p_value = (2.0 * t_sf(t_stat.abs(), df)?).min(1.0);
    Ok(TTest { t_stat, df, p_value })
}

/// Uncorrected standardized mean difference `(mean2 − mean1) / pooled_sd`.
pub fn cohens_d(g1: &GroupSummary, g2: &GroupSummary) -> Result<f64> {
    let sp = pooled_sd(g1, g2)?;
    if sp == 0.0 {
        return Err(Error::DegenerateVariance("pooled standard deviation is zero".into()));
    }
    Ok((g2.mean - g1.mean) / sp)
}

/// Large-sample variance of Cohen's d: `(n1+n2)/(n1·n2) + d²/(2(n1+n2))`.
pub fn d_variance(d: f64, n1: usize, n2: usize) -> Result<f64> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::insufficient(format!("d variance needs n1, n2 >= 2 (got {n1}, {n2})")));
    }
    if !d.is_finite() {
        return Err(Error::domain(format!("non-finite effect size {d}")));
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    Ok((n1 + n2) / (n1 * n2) + d * d / (2.0 * (n1 + n2)))
}

/// Full result for one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub control: GroupSummary,
    pub treatment: GroupSummary,
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
    pub d: f64,
    pub d_var: f64,
    pub d_ci: (f64, f64),
    pub ci_level: f64,
}

impl ExperimentResult {
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("confidence level must lie in (0,1), got {level}")))
    }
}

/// Analysis from already-summarized arms.
pub fn analyze_summaries(control: GroupSummary, treatment: GroupSummary, ci_level: f64) -> Result<ExperimentResult> {
    check_level(ci_level)?;
    let test = student_t_test(&control, &treatment)?;
    let d = if test.t_stat == 0.0 && pooled_sd(&control, &treatment)? == 0.0 {
        0.0
    } else {
        cohens_d(&control, &treatment)?
    };
    let d_var = d_variance(d, control.n, treatment.n)?;
    let half = norm_quantile(0.5 * (1.0 + ci_level))? * d_var.sqrt();
    Ok(ExperimentResult {
        control,
        treatment,
        t_stat: test.t_stat,
        df: test.df,
        p_value: test.p_value,
        d,
        d_var,
        d_ci: (d - half, d + half),
        ci_level,
    })
}

/// Summarizes both arms and runs the t-test and effect-size analysis.
pub fn analyze_experiment(control_scores: &[f64], treatment_scores: &[f64], ci_level: f64) -> Result<ExperimentResult> {
    analyze_summaries(summarize(control_scores)?, summarize(treatment_scores)?, ci_level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn baseline_groups() -> (GroupSummary, GroupSummary) {
        (
            GroupSummary::new(20, 51.42, 9.73).unwrap(),
            GroupSummary::new(20, 57.49, 8.30).unwrap(),
        )
    }

    // 20 scores with exactly the requested mean and sd
    fn scores_with(mean: f64, sd: f64, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|i| ((i * 7919) % 23) as f64 + 0.1 * i as f64).collect();
        let s = summarize(&raw).unwrap();
        raw.iter().map(|x| mean + sd * (x - s.mean) / s.sd).collect()
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.n, s.mean, s.sd), (3, 1.0, 0.0));
        let s = summarize(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(s.sd, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.median, Some(1.0));
        let s = summarize(&scores_with(51.42, 9.73, 20)).unwrap();
        assert_relative_eq!(s.mean, 51.42, epsilon = 1e-10);
        assert_relative_eq!(s.sd, 9.73, epsilon = 1e-10);
        assert!(matches!(summarize(&[1.0]), Err(Error::InsufficientData(_))));
        assert!(summarize(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn pooled_sd_examples() {
        let (control, treatment) = baseline_groups();
        // sqrt((9.73² + 8.30²)/2)
        assert_relative_eq!(pooled_sd(&control, &treatment).unwrap(), 9.043_310, epsilon = 1e-6);
        let a = GroupSummary::new(7, 0.0, 3.5).unwrap();
        let b = GroupSummary::new(12, 4.0, 3.5).unwrap();
        assert_relative_eq!(pooled_sd(&a, &b).unwrap(), 3.5, epsilon = 1e-14);
        let a = GroupSummary::new(3, 0.0, 1.0).unwrap();
        let b = GroupSummary::new(5, 0.0, 2.0).unwrap();
        assert_relative_eq!(pooled_sd(&a, &b).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn t_test_examples() {
        let (control, treatment) = baseline_groups();
        let t = student_t_test(&control, &treatment).unwrap();
        assert_eq!(t.df, 38.0);
        assert!((t.t_stat - 2.123).abs() <= 0.01);
        assert!((t.p_value - 0.0403).abs() <= 0.001);

        let same = student_t_test(&control, &control).unwrap();
        assert_eq!((same.t_stat, same.p_value), (0.0, 1.0));

        let a = GroupSummary::new(10, 0.0, 1.0).unwrap();
        let b = GroupSummary::new(10, 1.0, 1.0).unwrap();
        let t = student_t_test(&a, &b).unwrap();
        assert_relative_eq!(t.t_stat, 5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(t.p_value, 0.0382, epsilon = 1e-4);
    }

    #[test]
    fn zero_variance_arms() {
        let a = GroupSummary::new(5, 3.0, 0.0).unwrap();
        let b = GroupSummary::new(5, 3.0, 0.0).unwrap();
        let c = GroupSummary::new(5, 4.0, 0.0).unwrap();
        let t = student_t_test(&a, &b).unwrap();
        assert_eq!((t.t_stat, t.p_value), (0.0, 1.0));
        assert!(matches!(student_t_test(&a, &c), Err(Error::DegenerateVariance(_))));
        assert!(matches!(cohens_d(&a, &c), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn cohens_d_examples() {
        let (control, treatment) = baseline_groups();
        assert!((cohens_d(&control, &treatment).unwrap() - 0.67).abs() < 0.005);
        assert_eq!(cohens_d(&control, &GroupSummary { mean: 51.42, ..treatment }).unwrap(), 0.0);
        let pop_a = GroupSummary::new(1000, 50.0, 10.0).unwrap();
        let pop_b = GroupSummary::new(1000, 58.0, 10.0).unwrap();
        assert_relative_eq!(cohens_d(&pop_a, &pop_b).unwrap(), 0.8, epsilon = 1e-14);
    }

    #[test]
    fn d_variance_examples() {
        assert_relative_eq!(d_variance(0.67, 20, 20).unwrap(), 0.105_611_25, epsilon = 1e-10);
        assert_eq!(d_variance(0.0, 2, 2).unwrap(), 1.0);
        assert_relative_eq!(d_variance(0.8, 50, 50).unwrap(), 0.0432, epsilon = 1e-14);
        assert!(d_variance(0.5, 1, 20).is_err());
    }

    #[test]
    fn worked_example_ci() {
        let (control, treatment) = baseline_groups();
        let r = analyze_summaries(control, treatment, 0.95).unwrap();
        assert!((r.d_ci.0 - 0.033).abs() < 0.002, "{:?}", r.d_ci);
        assert!((r.d_ci.1 - 1.307).abs() < 0.002, "{:?}", r.d_ci);
        assert!(r.d_ci.0 <= r.d && r.d <= r.d_ci.1);

        let raw_c = scores_with(51.42, 9.73, 20);
        let raw_t = scores_with(57.49, 8.30, 20);
        let raw = analyze_experiment(&raw_c, &raw_t, 0.95).unwrap();
        assert_relative_eq!(raw.t_stat, r.t_stat, epsilon = 1e-9);
        assert_relative_eq!(raw.d, r.d, epsilon = 1e-9);
    }

    #[test]
    fn identical_arms() {
        let x = [3.0, 5.0, 4.0, 6.0];
        let r = analyze_experiment(&x, &x, 0.95).unwrap();
        assert_eq!((r.d, r.p_value), (0.0, 1.0));
        assert_relative_eq!(r.d_ci.0, -r.d_ci.1, epsilon = 1e-15);
    }

    #[test]
    fn bad_level() {
        let x = [3.0, 5.0, 4.0];
        assert!(analyze_experiment(&x, &x, 1.0).is_err());
        assert!(analyze_experiment(&x, &x, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arm() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-100.0..100.0f64, 3..25)
        }

        proptest! {
            #[test]
            fn swapping_arms_negates(c in arm(), t in arm()) {
                let a = analyze_experiment(&c, &t, 0.95).unwrap();
                let b = analyze_experiment(&t, &c, 0.95).unwrap();
                prop_assert_eq!(a.t_stat, -b.t_stat);
                prop_assert_eq!(a.d, -b.d);
                prop_assert_eq!(a.p_value, b.p_value);
            }

            #[test]
            fn scale_invariant(c in arm(), t in arm(), k in 0.01..50.0f64) {
                let a = analyze_experiment(&c, &t, 0.95).unwrap();
                let cs: Vec<f64> = c.iter().map(|x| x * k).collect();
                let ts: Vec<f64> = t.iter().map(|x| x * k).collect();
                let b = analyze_experiment(&cs, &ts, 0.95).unwrap();
                prop_assert!((a.d - b.d).abs() <= 1e-12 * (1.0 + a.d.abs()));
                prop_assert!((a.t_stat - b.t_stat).abs() <= 1e-12 * (1.0 + a.t_stat.abs()));
                prop_assert!((a.p_value - b.p_value).abs() <= 1e-12);
            }

            #[test]
            fn shift_invariant(c in arm(), t in arm(), s in -100.0..100.0f64) {
                let a = analyze_experiment(&c, &t, 0.95).unwrap();
                let cs: Vec<f64> = c.iter().map(|x| x + s).collect();
                let ts: Vec<f64> = t.iter().map(|x| x + s).collect();
                let b = analyze_experiment(&cs, &ts, 0.95).unwrap();
                prop_assert!((a.d - b.d).abs() <= 1e-11 * (1.0 + a.d.abs()));
                prop_assert!((a.t_stat - b.t_stat).abs() <= 1e-11 * (1.0 + a.t_stat.abs()));
                prop_assert!((a.p_value - b.p_value).abs() <= 1e-11);
                prop_assert!((a.d_ci.1 - b.d_ci.1).abs() <= 1e-11 * (1.0 + a.d_ci.1.abs()));
            }
        }
    }
}
