//! Acceptance criteria, each at its stated tolerance. Prints one PASS/FAIL
//! line per criterion (with the failing sub-checks underneath) and exits
//! non-zero if any criterion fails.
//!
//! `cargo test --release --test acceptance`

use std::time::{Duration, Instant};

use replimeta::experiment::{analyze_experiment, analyze_summaries, cohens_d, summarize, GroupSummary};
use replimeta::meta::{fixed_effect, random_effects, StudyEffect, Tau2Estimator};
use replimeta::simlab::{
    analytic_power, chunk_comparison, effect_variability, meta_variability, power_curve, prob_all_significant,
    SimulationPlan, SimulationReport,
};
use replimeta::statdist::{sample_normal, RandomStream};

struct Check {
    label: String,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Criterion {
    fn check(&mut self, label: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn within(&mut self, label: impl Into<String>, actual: f64, expected: f64, tol: f64) {
        let diff = (actual - expected).abs();
        self.check(
            label,
            diff <= tol,
            format!("got {actual:.6}, expected {expected} ± {tol} (off by {diff:.4})"),
        );
    }

    fn runtime(&mut self, started: Instant, budget: Duration) {
        let took = started.elapsed();
        self.check("runtime", took <= budget, format!("{took:.1?} (budget {budget:?})"));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

type Row = (f64, usize, f64, f64, f64);

// (true d, N, lower, mean, upper)
const EFFECT_INTERVALS: [Row; 30] = [
    (0.2, 4, -3.55, 0.55, 5.30),
    (0.2, 20, -0.74, 0.20, 1.16),
    (0.2, 36, -0.47, 0.20, 0.90),
    (0.2, 52, -0.34, 0.21, 0.78),
    (0.2, 68, -0.27, 0.20, 0.69),
    (0.2, 84, -0.22, 0.20, 0.65),
    (0.2, 100, -0.21, 0.20, 0.59),
    (0.2, 116, -0.17, 0.20, 0.57),
    (0.2, 132, -0.14, 0.20, 0.53),
    (0.2, 148, -0.13, 0.20, 0.52),
    (0.5, 4, -2.73, 0.88, 6.24),
    (0.5, 20, -0.40, 0.52, 1.53),
    (0.5, 36, -0.14, 0.51, 1.23),
    (0.5, 52, -0.03, 0.51, 1.07),
    (0.5, 68, 0.03, 0.51, 1.02),
    (0.5, 84, 0.07, 0.50, 0.96),
    (0.5, 100, 0.12, 0.50, 0.91),
    (0.5, 116, 0.14, 0.50, 0.89),
    (0.5, 132, 0.17, 0.50, 0.85),
    (0.5, 148, 0.18, 0.50, 0.85),
    (0.8, 4, -1.99, 1.36, 7.42),
    (0.8, 20, -0.08, 0.83, 1.89),
    (0.8, 36, 0.15, 0.83, 1.60),
    (0.8, 52, 0.25, 0.82, 1.43),
    (0.8, 68, 0.32, 0.81, 1.33),
    (0.8, 84, 0.37, 0.81, 1.30),
    (0.8, 100, 0.39, 0.81, 1.23),
    (0.8, 116, 0.45, 0.81, 1.18),
    (0.8, 132, 0.45, 0.80, 1.17),
    (0.8, 148, 0.48, 0.80, 1.13),
];

// (true d, group size, lower, mean, upper); per-experiment size 36
const JOINT_N36: [Row; 21] = [
    (0.2, 1, -0.48, 0.19, 0.90),
    (0.2, 2, -0.27, 0.20, 0.66),
    (0.2, 4, -0.11, 0.20, 0.52),
    (0.2, 6, -0.08, 0.20, 0.46),
    (0.2, 8, -0.02, 0.21, 0.43),
    (0.2, 10, -0.01, 0.20, 0.42),
    (0.2, 12, 0.01, 0.20, 0.39),
    (0.5, 1, -0.14, 0.51, 1.19),
    (0.5, 2, 0.03, 0.51, 1.03),
    (0.5, 4, 0.16, 0.51, 0.85),
    (0.5, 6, 0.23, 0.50, 0.79),
    (0.5, 8, 0.27, 0.51, 0.74),
    (0.5, 10, 0.29, 0.50, 0.71),
    (0.5, 12, 0.30, 0.50, 0.68),
    (0.8, 1, 0.16, 0.83, 1.62),
    (0.8, 2, 0.32, 0.82, 1.33),
    (0.8, 4, 0.47, 0.81, 1.16),
    (0.8, 6, 0.51, 0.80, 1.07),
    (0.8, 8, 0.57, 0.81, 1.06),
    (0.8, 10, 0.58, 0.80, 1.04),
    (0.8, 12, 0.60, 0.80, 1.00),
];

// per-experiment size 4
const JOINT_N4: [Row; 21] = [
    (0.2, 1, -3.79, 0.40, 5.65),
    (0.2, 2, -2.18, 0.36, 3.80),
    (0.2, 4, -1.14, 0.26, 1.63),
    (0.2, 6, -0.72, 0.22, 1.25),
    (0.2, 8, -0.63, 0.23, 1.08),
    (0.2, 10, -0.47, 0.22, 0.93),
    (0.2, 12, -0.48, 0.22, 0.90),
    (0.5, 1, -3.09, 0.76, 5.89),
    (0.5, 2, -1.54, 0.83, 4.19),
    (0.5, 4, -0.65, 0.59, 1.98),
    (0.5, 6, -0.37, 0.57, 1.72),
    (0.5, 8, -0.27, 0.55, 1.47),
    (0.5, 10, -0.17, 0.51, 1.29),
    (0.5, 12, -0.16, 0.51, 1.23),
    (0.8, 1, -2.05, 1.42, 6.71),
    (0.8, 2, -0.99, 1.24, 5.02),
    (0.8, 4, -0.24, 0.94, 2.81),
    (0.8, 6, -0.11, 0.89, 2.17),
    (0.8, 8, 0.07, 0.85, 1.90),
    (0.8, 10, 0.12, 0.85, 1.70),
    (0.8, 12, 0.18, 0.83, 1.60),
];

// per-experiment size 100
const JOINT_N100: [Row; 21] = [
    (0.2, 1, -0.19, 0.22, 0.63),
    (0.2, 2, -0.12, 0.20, 0.49),
    (0.2, 4, -0.02, 0.20, 0.41),
    (0.2, 6, 0.06, 0.21, 0.36),
    (0.2, 8, 0.07, 0.20, 0.34),
    (0.2, 10, 0.08, 0.20, 0.33),
    (0.2, 12, 0.09, 0.20, 0.32),
    (0.5, 1, 0.09, 0.50, 0.89),
    (0.5, 2, 0.24, 0.51, 0.80),
    (0.5, 4, 0.31, 0.50, 0.70),
    (0.5, 6, 0.34, 0.50, 0.67),
    (0.5, 8, 0.34, 0.50, 0.65),
    (0.5, 10, 0.37, 0.50, 0.64),
    (0.5, 12, 0.39, 0.50, 0.62),
    (0.8, 1, 0.41, 0.80, 1.23),
    (0.8, 2, 0.53, 0.80, 1.10),
    (0.8, 4, 0.60, 0.81, 1.01),
    (0.8, 6, 0.63, 0.80, 0.99),
    (0.8, 8, 0.66, 0.80, 0.95),
    (0.8, 10, 0.68, 0.80, 0.93),
    (0.8, 12, 0.68, 0.80, 0.92),
];

fn compare_rows(
    c: &mut Criterion,
    report: &SimulationReport,
    n_total: usize,
    rows: &[Row],
    by_group: bool,
    mean_tol: Option<f64>,
    bound_tol: f64,
) {
    for &(d, key, lower, mean, upper) in rows {
        let (n, g, tag) = if by_group {
            (n_total, Some(key), format!("d={d} n={n_total} group={key}"))
        } else {
            (key, None, format!("d={d} N={key}"))
        };
        let Some(cell) = report.cell(d, n, g) else {
            c.check(tag, false, "cell missing from report");
            continue;
        };
        if let Some(tol) = mean_tol {
            c.within(format!("{tag} mean"), cell.effect.mean, mean, tol);
        }
        c.within(format!("{tag} 2.5%"), cell.effect.lower, lower, bound_tol);
        c.within(format!("{tag} 97.5%"), cell.effect.upper, upper, bound_tol);
    }
}

fn ac1() -> Criterion {
    let mut c = Criterion::default();
    let control = GroupSummary::new(20, 51.42, 9.73).unwrap();
    let treatment = GroupSummary::new(20, 57.49, 8.30).unwrap();
    let r = analyze_summaries(control, treatment, 0.95).unwrap();
    c.within("t", r.t_stat, 2.123, 0.01);
    c.within("p", r.p_value, 0.0403, 0.001);
    c.within("d", r.d, 0.67, 0.005);
    c.within("d CI lower", r.d_ci.0, 0.03, 0.01);
    c.within("d CI upper", r.d_ci.1, 1.31, 0.01);
    c
}

fn ac2() -> Criterion {
    let mut c = Criterion::default();
    let started = Instant::now();
    let report = power_curve(&SimulationPlan::default()).unwrap();
    c.runtime(started, Duration::from_secs(120));
    let anchor = report.cell(0.8, 20, None).unwrap();
    c.within("simulated power d=0.8 N=20", anchor.significant_fraction, 0.35, 0.03);
    let mut worst: f64 = 0.0;
    for cell in &report.cells {
        let exact = analytic_power(cell.true_d, cell.n_total, 0.05).unwrap();
        let diff = (cell.significant_fraction - exact).abs();
        worst = worst.max(diff);
        c.check(
            format!("d={} N={} vs analytic", cell.true_d, cell.n_total),
            diff <= 0.02,
            format!("simulated {:.4}, analytic {exact:.4}", cell.significant_fraction),
        );
    }
    c.notes.push(format!(
        "anchor simulated {:.4} (analytic {:.4}); max |simulated - analytic| over {} cells = {worst:.4}",
        anchor.significant_fraction,
        anchor.analytic_power.unwrap(),
        report.cells.len()
    ));
    c
}

fn ac3() -> Criterion {
    let mut c = Criterion::default();
    let two = prob_all_significant(0.35, 2).unwrap();
    let three = prob_all_significant(0.35, 3).unwrap();
    c.within("power^2", two, 0.1225, 1e-12);
    c.within("power^3", three, 0.042875, 1e-12);
    c.check("power^2 rounds to 0.12", format!("{two:.2}") == "0.12", format!("{two:.2}"));
    c.check("power^3 rounds to 0.04", format!("{three:.2}") == "0.04", format!("{three:.2}"));
    c
}

fn ac4() -> Criterion {
    let mut c = Criterion::default();
    let started = Instant::now();
    let report = effect_variability(&SimulationPlan::default()).unwrap();
    c.runtime(started, Duration::from_secs(300));
    let (small, large): (Vec<Row>, Vec<Row>) = EFFECT_INTERVALS.iter().partition(|r| r.1 == 4);
    compare_rows(&mut c, &report, 0, &large, false, Some(0.03), 0.08);
    compare_rows(&mut c, &report, 0, &small, false, None, 0.4);
    c
}

fn ac5() -> Criterion {
    let mut c = Criterion::default();
    let started = Instant::now();
    let report = meta_variability(&SimulationPlan::meta_default(), Tau2Estimator::Reml).unwrap();
    c.runtime(started, Duration::from_secs(900));
    compare_rows(&mut c, &report, 36, &JOINT_N36, true, Some(0.03), 0.06);
    compare_rows(&mut c, &report, 4, &JOINT_N4, true, Some(0.4), 0.4);
    compare_rows(&mut c, &report, 100, &JOINT_N100, true, Some(0.04), 0.04);
    c
}

fn ac6() -> Criterion {
    let mut c = Criterion::default();
    let report = chunk_comparison(&SimulationPlan::default(), &[4, 8, 12], 144).unwrap();
    for cell in &report.cells {
        let k = cell.chunks.unwrap();
        let tag = format!("d={} chunks={k}", cell.true_d);
        let mad = cell.mean_abs_diff.unwrap();
        let limit = match k {
            4 => Some(0.02),
            12 => Some(0.04),
            _ => None,
        };
        if let Some(limit) = limit {
            c.check(format!("{tag} mean |whole - joint|"), mad <= limit, format!("{mad:.4} (limit {limit})"));
        }
        c.within(format!("{tag} joint mean"), cell.effect.mean, cell.true_d, 0.01);
        if k == 4 {
            c.within(format!("d={} whole-sample mean", cell.true_d), cell.whole.unwrap().mean, cell.true_d, 0.01);
        }
    }
    c
}

/// REML log-likelihood written out directly, for the oracle below.
fn reml_ll(y: &[f64], v: &[f64], tau2: f64) -> f64 {
    let w: Vec<f64> = v.iter().map(|vi| 1.0 / (vi + tau2)).collect();
    let sw: f64 = w.iter().sum();
    let mu = w.iter().zip(y).map(|(wi, yi)| wi * yi).sum::<f64>() / sw;
    let mut ll = -0.5 * sw.ln();
    for (wi, yi) in w.iter().zip(y) {
        ll += 0.5 * wi.ln() - 0.5 * wi * (yi - mu).powi(2);
    }
    ll
}

/// Nested grid search: each pass scans 2,001 points around the best point
/// of the previous pass with a step 1,000 times finer.
fn reml_grid_oracle(y: &[f64], v: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0, 5.0);
    let mut best = 0.0;
    for _ in 0..4 {
        let step = (hi - lo) / 2000.0;
        let mut best_ll = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let t = lo + i as f64 * step;
            let ll = reml_ll(y, v, t);
            if ll > best_ll {
                best_ll = ll;
                best = t;
            }
        }
        lo = (best - step).max(0.0);
        hi = best + step;
    }
    best
}

fn ac7() -> Criterion {
    let mut c = Criterion::default();
    let studies: Vec<StudyEffect> = [0.2, 0.5, 0.8]
        .iter()
        .enumerate()
        .map(|(i, &d)| StudyEffect::new(format!("S{}", i + 1), d, 0.04).unwrap())
        .collect();
    let fe = fixed_effect(&studies, 0.95).unwrap();
    let dl = random_effects(&studies, Tau2Estimator::DerSimonianLaird, 0.95).unwrap();
    let reml = random_effects(&studies, Tau2Estimator::Reml, 0.95).unwrap();
    c.within("Q", dl.heterogeneity.q, 4.5, 1e-9);
    c.within("I²", dl.heterogeneity.i2_percent, 100.0 * 2.5 / 4.5, 1e-9);
    c.check(
        "I² reported as 55.6%",
        format!("{:.1}", dl.heterogeneity.i2_percent) == "55.6",
        format!("{:.1}", dl.heterogeneity.i2_percent),
    );
    c.within("τ² DL", dl.heterogeneity.tau2, 0.05, 1e-9);
    c.within("FE joint", fe.joint_effect, 0.5, 1e-9);
    c.within("FE se", fe.joint_se, (0.04f64 / 3.0).sqrt(), 1e-9);
    c.within("FE se (printed)", fe.joint_se, 0.11547, 1e-5);
    c.within("RE(DL) se", dl.joint_se, (0.09f64 / 3.0).sqrt(), 1e-9);
    c.within("RE(DL) se (printed)", dl.joint_se, 0.17321, 1e-5);
    let oracle = reml_grid_oracle(&[0.2, 0.5, 0.8], &[0.04; 3]);
    c.within("τ² REML vs grid oracle", reml.heterogeneity.tau2, oracle, 1e-6);

    // unequal variances, where REML has no closed form
    let y = [-0.3, 0.1, 0.45, 0.9, 0.2];
    let v = [0.05, 0.12, 0.02, 0.3, 0.08];
    let uneven: Vec<StudyEffect> = y
        .iter()
        .zip(v)
        .enumerate()
        .map(|(i, (&d, v))| StudyEffect::new(format!("U{i}"), d, v).unwrap())
        .collect();
    let r = random_effects(&uneven, Tau2Estimator::Reml, 0.95).unwrap();
    c.within("τ² REML (uneven) vs grid oracle", r.heterogeneity.tau2, reml_grid_oracle(&y, &v), 1e-6);
    c
}

fn random_studies(stream: &mut RandomStream, k: usize) -> Vec<StudyEffect> {
    (0..k)
        .map(|i| {
            let d = sample_normal(stream, 0.4, 0.5).unwrap();
            let v = 0.01 + sample_normal(stream, 0.0, 0.15).unwrap().abs();
            StudyEffect::new(format!("R{i}"), d, v).unwrap()
        })
        .collect()
}

fn ac8() -> Criterion {
    let mut c = Criterion::default();
    let mut stream = RandomStream::new(8, 0);
    let (mut fe_re, mut pi_ci, mut order) = ((0, 0.0f64), (0, 0), 0.0f64);
    let mut pi_ok = true;
    for trial in 0..500 {
        let k = 2 + trial % 11;
        let studies = random_studies(&mut stream, k);
        let mut reordered = studies.clone();
        reordered.rotate_left(trial % k);
        reordered.reverse();
        for est in [Tau2Estimator::DerSimonianLaird, Tau2Estimator::Reml] {
            let re = random_effects(&studies, est, 0.95).unwrap();
            if re.heterogeneity.tau2 == 0.0 {
                let fe = fixed_effect(&studies, 0.95).unwrap();
                fe_re.0 += 1;
                fe_re.1 = fe_re.1.max((fe.joint_effect - re.joint_effect).abs()).max((fe.joint_se - re.joint_se).abs());
            }
            if let Some((lo, hi)) = re.prediction_interval {
                pi_ci.0 += 1;
                if !(lo <= re.joint_ci.0 && hi >= re.joint_ci.1) {
                    pi_ok = false;
                    pi_ci.1 += 1;
                }
            }
            let other = random_effects(&reordered, est, 0.95).unwrap();
            order = order
                .max((other.joint_effect - re.joint_effect).abs())
                .max((other.joint_se - re.joint_se).abs())
                .max((other.heterogeneity.tau2 - re.heterogeneity.tau2).abs());
        }
    }
    c.check(
        "FE ≡ RE when τ² = 0",
        fe_re.0 > 0 && fe_re.1 <= 1e-12,
        format!("{} fits with τ² = 0, max difference {:e}", fe_re.0, fe_re.1),
    );
    c.check("PI ⊇ CI", pi_ok, format!("{} of {} intervals violate", pi_ci.1, pi_ci.0));
    c.check("meta order invariance", order <= 1e-12, format!("max difference {order:e}"));

    let (mut swap, mut scale) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n1 = 2 + (sample_normal(&mut stream, 0.0, 1.0).unwrap().abs() * 10.0) as usize;
        let n2 = 2 + (sample_normal(&mut stream, 0.0, 1.0).unwrap().abs() * 10.0) as usize;
        let a: Vec<f64> = (0..n1).map(|_| sample_normal(&mut stream, 50.0, 10.0).unwrap()).collect();
        let b: Vec<f64> = (0..n2).map(|_| sample_normal(&mut stream, 55.0, 10.0).unwrap()).collect();
        let ab = analyze_experiment(&a, &b, 0.95).unwrap();
        let ba = analyze_experiment(&b, &a, 0.95).unwrap();
        swap = swap.max((ab.d + ba.d).abs()).max((ab.t_stat + ba.t_stat).abs());
        let f = |xs: &[f64]| xs.iter().map(|x| 3.7 * x - 120.0).collect::<Vec<_>>();
        let d1 = cohens_d(&summarize(&f(&a)).unwrap(), &summarize(&f(&b)).unwrap()).unwrap();
        scale = scale.max((d1 - ab.d).abs());
    }
    c.check("arm-swap antisymmetry", swap <= 1e-12, format!("max |d(a,b) + d(b,a)| {swap:e}"));
    c.check("scale/shift invariance of d", scale <= 1e-9, format!("max difference {scale:e}"));

    let null = SimulationPlan {
        true_d_grid: vec![0.0],
        ..SimulationPlan::default()
    };
    let report = power_curve(&null).unwrap();
    for cell in &report.cells {
        c.within(format!("null rejection rate N={}", cell.n_total), cell.significant_fraction, 0.05, 0.01);
    }

    let small = |workers| SimulationPlan {
        n_sims: 500,
        n_total_grid: vec![4, 36, 100],
        group_size_grid: vec![1, 3, 12],
        keep_samples: true,
        workers: Some(workers),
        ..SimulationPlan::default()
    };
    let run = |workers| {
        let p = small(workers);
        [
            power_curve(&p).unwrap().to_json().unwrap(),
            effect_variability(&p).unwrap().to_json().unwrap(),
            meta_variability(&p, Tau2Estimator::Reml).unwrap().to_json().unwrap(),
            chunk_comparison(&p, &[4, 8, 12], 144).unwrap().to_json().unwrap(),
        ]
    };
    let one = run(1);
    for w in [4, 8] {
        c.check(format!("bit-identical reports, 1 vs {w} workers"), run(w) == one, "");
    }
    c
}

fn main() {
    let criteria: [(&str, fn() -> Criterion); 8] = [
        ("AC1 worked two-arm example", ac1),
        ("AC2 power curve anchor and analytic agreement", ac2),
        ("AC3 probability that all replications are significant", ac3),
        ("AC4 effect-size intervals per sample size", ac4),
        ("AC5 joint effect-size intervals per group size", ac5),
        ("AC6 chunked versus whole-sample analysis", ac6),
        ("AC7 meta-analysis exactness", ac7),
        ("AC8 property suite", ac8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let c = run();
        let status = if c.passed() { "PASS" } else { "FAIL" };
        let n_fail = c.checks.iter().filter(|k| !k.pass).count();
        println!(
            "{status} {name} ({}/{} checks, {:.1?})",
            c.checks.len() - n_fail,
            c.checks.len(),
            started.elapsed()
        );
        for k in c.checks.iter().filter(|k| !k.pass) {
            println!("     x {}: {}", k.label, k.detail);
        }
        for note in &c.notes {
            println!("     - {note}");
        }
        if !c.passed() {
            failed += 1;
        }
    }
    println!("EXCLUDED AC9 case-study numbers (raw data unpublished; covered by format fixtures and the exactness and property suites)");
    println!("{failed} of 8 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
