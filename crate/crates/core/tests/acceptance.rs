//! Acceptance criteria, one line per criterion: `ACn PASS|FAIL  detail`.
//! Exits nonzero when any criterion fails.

use std::time::Instant;

use marginals::chaining::{gamma2_upper, sudakov_lower};
use marginals::cli::{run_cli, CliInvocation, Format, SubcommandKind};
use marginals::distribution::ReferenceDistribution;
use marginals::empirical::Sample;
use marginals::ensembles::{
    covariance_diagnostics, gaussian_width, make_index_set, project, sample_ensemble, CovarianceInput, GeneratorKind,
    IndexSet, IndexSetSpec,
};
use marginals::experiments::{
    median, percentile, quantile_shift_residual, run_assumption, run_lipschitz, run_scaling, run_tail,
    run_width_lowerbound, ExperimentConfig,
};
use marginals::wasserstein::{w1_cdf_quadrature, w1_empirical_analytic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_law(rng: &mut ChaCha8Rng) -> ReferenceDistribution {
    match rng.random_range(0..4) {
        0 => ReferenceDistribution::std_normal(),
        1 => ReferenceDistribution::scaled_normal(rng.random_range(0.1..5.0)).unwrap(),
        2 => ReferenceDistribution::uniform01(),
        _ => {
            let m = rng.random_range(1..40);
            let atoms: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            ReferenceDistribution::empirical(&atoms).unwrap()
        }
    }
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> Sample {
    let kind = rng.random_range(0..3);
    let shift: f64 = rng.random_range(-1.0..1.0);
    let scale: f64 = rng.random_range(0.2..3.0);
    let values = (0..n)
        .map(|_| match kind {
            0 => {
                let z: f64 = StandardNormal.sample(rng);
                shift + scale * z
            }
            1 => rng.random::<f64>(),
            // Heavy ties.
            _ => (rng.random_range(-4..=4) as f64) * 0.5,
        })
        .collect();
    Sample::new(values).unwrap()
}

fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=512);
        let dist = random_law(&mut rng);
        let s = random_sample(&mut rng, n);
        let exact = w1_empirical_analytic(&s, &dist).unwrap().value;
        let quad = match w1_cdf_quadrature(&s, &dist) {
            Ok(r) => r.value,
            Err(e) => return outcome(false, format!("quadrature failed: {e}")),
        };
        worst = worst.max((exact - quad).abs() / (1.0 + exact));
    }
    outcome(worst <= 1e-6, format!("200 cases, max |exact - quadrature| / (1 + value) = {worst:.3e}"))
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let std = ReferenceDistribution::std_normal();
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = (8.0 * 512f64.powf(rng.random::<f64>())).round() as usize;
        let s = Sample::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap();
        for p in [2.0, 4.0] {
            let r = quantile_shift_residual(&s, &std, p).unwrap();
            worst = worst.max(r.residual / r.bound);
            if !r.holds {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("500 samples x p in {{2,4}}: {violations} violations, max residual/bound = {worst:.4}"))
}

fn ac3() -> Outcome {
    let mut c = ExperimentConfig::new(20, IndexSetSpec::BasisPm { d: 20 }, vec![128, 512, 2048, 8192], 200, 303);
    c.width_trials = 10_000;
    let r = run_scaling(&c).unwrap();
    let Some(fit) = r.fit else { return outcome(false, "no fit") };
    let means: Vec<String> = r.rows.iter().map(|row| format!("{}:{:.5}", row.n, row.mean)).collect();
    outcome(
        (-0.58..=-0.42).contains(&fit.slope),
        format!("slope {:.4} ± {:.4}; means {}", fit.slope, fit.slope_half_width, means.join(" ")),
    )
}

fn ac4() -> Outcome {
    let mut means = Vec::new();
    let mut ratios = Vec::new();
    for d in [5usize, 20, 80] {
        let mut c = ExperimentConfig::new(d, IndexSetSpec::BasisPm { d }, vec![2048], 200, 404);
        c.width_trials = 10_000;
        let r = run_scaling(&c).unwrap();
        let mean = r.rows[0].mean;
        means.push(mean);
        ratios.push(mean * 2048f64.sqrt() / r.width.estimate);
    }
    let monotone = means.windows(2).all(|w| w[0] <= w[1]);
    let in_band = ratios.iter().all(|r| (0.2..=5.0).contains(r));
    outcome(
        monotone && in_band,
        format!(
            "means {:.5} {:.5} {:.5}; sqrt(N)*mean/width {:.3} {:.3} {:.3}",
            means[0], means[1], means[2], ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn ac5() -> Outcome {
    let mut c = ExperimentConfig::new(20, IndexSetSpec::BasisPm { d: 20 }, vec![1000], 100, 505);
    c.family_size = 64;
    let r = run_lipschitz(&c).unwrap();
    let worst = r.rows.iter().map(|row| row.check.max_gap - row.check.w1_sup).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        r.violations == 0 && r.rows.len() == 100,
        format!(
            "100 trials: {} violations, max(gap - w1_sup) = {worst:.3e}, median contraction ratio {:.3}",
            r.violations,
            r.median_contraction_ratio.unwrap_or(f64::NAN)
        ),
    )
}

fn ac6() -> Outcome {
    let n = 1024;
    let std = ReferenceDistribution::std_normal();
    // Calibration pre-run, independent of the checked run below.
    let pre: Vec<f64> = (0..10_000u64)
        .map(|t| {
            let gamma = sample_ensemble(n, 1, GeneratorKind::StdGaussian, 60_000 + t).unwrap();
            let s = project(&gamma, &[1.0]).unwrap();
            (n as f64).sqrt() * w1_empirical_analytic(&s, &std).unwrap().value
        })
        .collect();
    let t0 = percentile(&pre, 0.4);

    let mut c = ExperimentConfig::new(1, IndexSetSpec::Explicit(vec![vec![1.0]]), vec![n], 1000, 606);
    c.width_trials = 1000;
    c.c2 = 1.0;
    c.delta_grid = Some(vec![t0 * t0 / n as f64]);
    let tail = run_tail(&c).unwrap();
    let freq = tail.rows[0].lower_frequency;

    let mut w = ExperimentConfig::new(1, IndexSetSpec::BasisPm { d: 1 }, vec![n], 1000, 607);
    w.width_trials = 1000;
    let lb = run_width_lowerbound(&w).unwrap();
    let violations: usize = lb.summary.iter().map(|s| s.violations).sum();
    outcome(
        freq >= 0.5 && violations == 0,
        format!("t0 = {t0:.4} (40th pct of 1e4), P(sqrt(N) W1 >= t0) = {freq:.3} over 1000; {violations} mean-bound violations"),
    )
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let k = 10.0;
    let mut violations = 0;
    let (mut lo_ratio, mut hi_ratio) = (0.0f64, 0.0f64);
    for i in 0..50u64 {
        let size = rng.random_range(1..=256usize);
        let dim = rng.random_range(1..=64usize);
        let points: Vec<Vec<f64>> = match i % 3 {
            0 => (0..size).map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()).collect(),
            1 => make_index_set(&IndexSetSpec::SphereNet { d: dim, m: size.div_ceil(2), seed: i }).unwrap().vectors().to_vec(),
            _ => {
                let s: f64 = rng.random_range(0.01..100.0);
                (0..size).map(|_| (0..dim).map(|_| s * rng.random::<f64>()).collect()).collect()
            }
        };
        let set = IndexSet::new(points, "random").unwrap();
        let width = gaussian_width(&set, 4000, 7000 + i).unwrap().estimate;
        let lower = sudakov_lower(set.vectors()).unwrap();
        let upper = gamma2_upper(set.vectors()).unwrap();
        if lower > k * width || width > k * upper {
            violations += 1;
        }
        if width > 0.0 {
            lo_ratio = lo_ratio.max(lower / width);
        }
        if upper > 0.0 {
            hi_ratio = hi_ratio.max(width / upper);
        }
    }
    outcome(
        violations == 0,
        format!("50 sets: {violations} violations; max sudakov/width {lo_ratio:.3}, max width/gamma2 {hi_ratio:.3}"),
    )
}

fn ac8() -> Outcome {
    let zetas: Vec<f64> = (0..50u64)
        .map(|seed| {
            let gamma = sample_ensemble(2000, 50, GeneratorKind::StdGaussian, 800 + seed).unwrap();
            covariance_diagnostics(CovarianceInput::Ensemble(&gamma)).unwrap().zeta
        })
        .collect();
    let m = median(&zetas);
    let limit = 4.0 * (50.0f64 / 2000.0).sqrt();
    outcome(m <= limit, format!("median zeta {m:.4} vs {limit:.4}"))
}

fn ac9() -> Outcome {
    let mut c = ExperimentConfig::new(20, IndexSetSpec::SphereNet { d: 20, m: 100, seed: 909 }, vec![500], 100, 910);
    c.width_trials = 10_000;
    c.theta_width_factor = Some(2.0);
    let r = run_assumption(&c).unwrap();
    let good = r.rows.iter().filter(|row| row.fitted_b <= 3.0).count();
    let bs: Vec<f64> = r.rows.iter().map(|row| row.fitted_b).collect();
    outcome(
        good >= 95,
        format!("theta = {:.4}: fitted_B <= 3 in {good}/100 seeds, median {:.4}", r.rows[0].theta, median(&bs)),
    )
}

fn data_rows(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let common = ["d=4", "index_set=basis_pm(4)", "n_grid=[50, 500]", "trials=6", "seed=10", "width_trials=200"];
    let cases: Vec<(SubcommandKind, Vec<&str>)> = vec![
        (SubcommandKind::Scaling, vec![]),
        (SubcommandKind::Tail, vec!["delta_grid=[0.001, 0.01]"]),
        (SubcommandKind::Width, vec![]),
        (SubcommandKind::CheckAssumption, vec!["theta=0.5"]),
        (SubcommandKind::Lipschitz, vec!["family_size=8"]),
    ];
    let mut mismatches = Vec::new();
    for (sub, extra) in &cases {
        let mut outputs = Vec::new();
        for workers in [1usize, 2, 8] {
            for format in [Format::Csv, Format::Json] {
                let path = dir.path().join(format!("{}-{workers}-{format:?}", sub.name()));
                let inv = CliInvocation {
                    subcommand: *sub,
                    config_path: None,
                    output_path: Some(path.clone()),
                    overrides: common.iter().chain(extra).map(|s| s.to_string()).collect(),
                    format,
                    seed: None,
                    workers: Some(workers),
                };
                run_cli(&inv).unwrap();
                let text = std::fs::read_to_string(&path).unwrap();
                let rows = match format {
                    Format::Csv => data_rows(&text),
                    Format::Json => {
                        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                        v["rows"].to_string()
                    }
                };
                outputs.push((format, rows));
            }
        }
        for format in [Format::Csv, Format::Json] {
            let set: Vec<&String> = outputs.iter().filter(|o| o.0 == format).map(|o| &o.1).collect();
            if set.iter().any(|r| *r != set[0]) {
                mismatches.push(format!("{}/{format:?}", sub.name()));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "5 experiments x workers {1,2,8} x {csv,json}: data rows byte-identical".to_string()
        } else {
            format!("differing rows: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{name:<5} {status}  {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
