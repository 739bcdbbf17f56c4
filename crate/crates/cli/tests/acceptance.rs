//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and exits
//! non-zero if any criterion's outcome differs from the expectation below.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use dnn_sieve::bounds::Setting;
use dnn_sieve::dgp::{
    check_tail_condition, conditional_mean_logistic, simulate_ar_arch, simulate_logistic_auto, tail_moment_gaussian,
    ArArchConfig, DgpConfig, LogisticAutoConfig, Marginal, TailModel,
};
use dnn_sieve::diagnostics::block_partition;
use dnn_sieve::estimator::{curvature_probe, logistic_curvature_constants, Criterion};
use dnn_sieve::harness::{run_rate_experiment, slope_fit, ExperimentConfig, RateReport};
use dnn_sieve::network::uniform_param_count;
use dnn_sieve::{seed, stats, ActivationSpec, ArchitectureSpec, NetworkParams};

/// Criteria whose literal statement does not hold. The logistic upper
/// constant 1/4 bounds the curvature in the logit scale `B f`; in the
/// unscaled metric the sharp constant is `B²/8`. A criterion listed here must
/// still print FAIL: if it starts passing the suite fails too.
const KNOWN_FAILURES: &[u32] = &[5];

struct Outcome {
    id: u32,
    passed: bool,
}

fn report(id: u32, name: &str, passed: bool, detail: String, elapsed: Duration) -> Outcome {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id:>2}: {name} | {detail} | {:.2}s", elapsed.as_secs_f64());
    Outcome { id, passed }
}

fn c1_param_count() -> Outcome {
    let t = Instant::now();
    let fig = ArchitectureSpec::new(2, vec![3, 2], 2.0, ActivationSpec::relu()).unwrap();
    let mut mismatches = 0;
    let mut checked = 0;
    for l in 1..=4 {
        for h in 1..=8 {
            for d in 1..=4 {
                let arch = ArchitectureSpec::uniform(d, l, h, 2.0).unwrap();
                let enumerated = arch.layout().count();
                checked += 1;
                if enumerated != uniform_param_count(d, l, h) || enumerated != arch.param_count() {
                    mismatches += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    let ok = fig.param_count() == 20 && mismatches == 0 && el < Duration::from_secs(1);
    report(
        1,
        "parameter count",
        ok,
        format!("W = {}, {checked} architectures, {mismatches} mismatches", fig.param_count()),
        el,
    )
}

fn c2_gradients() -> Outcome {
    let t = Instant::now();
    let mut rng = seed::rng(2);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut attempt = 0u64;
    while pairs < 100 {
        attempt += 1;
        let d = rng.random_range(1..=4);
        let widths: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=6)).collect();
        let act = if rng.random::<bool>() { ActivationSpec::relu() } else { ActivationSpec::leaky_relu(0.2) };
        let arch = ArchitectureSpec::new(d, widths, 1e3, act).unwrap();
        let p = NetworkParams::init(arch, seed::derive(2, &[attempt]));
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (kink, clamp) = p.kink_margins(&x).unwrap();
        if kink < 1e-3 || clamp < 1e-3 {
            continue;
        }
        let g = p.gradient(&x, 1.0).unwrap();
        let fd: Vec<f64> = (0..g.len())
            .map(|i| {
                let mut a = p.clone();
                a.gamma_mut()[i] += h;
                let mut b = p.clone();
                b.gamma_mut()[i] -= h;
                (a.clipped_forward(&x).unwrap() - b.clipped_forward(&x).unwrap()) / (2.0 * h)
            })
            .collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        worst = worst.max(num / den);
        pairs += 1;
    }
    let el = t.elapsed();
    report(
        2,
        "gradient vs central differences",
        worst < 1e-6 && el < Duration::from_secs(10),
        format!("worst relative error {worst:.2e} over {pairs} pairs"),
        el,
    )
}

fn c3_sup_norm() -> Outcome {
    let t = Instant::now();
    let mut rng = seed::rng(3);
    let mut violations = 0;
    for k in 0..20u64 {
        let d = 1 + (k as usize % 4);
        let arch = ArchitectureSpec::uniform(d, 1 + (k as usize % 3), 8, 2.0 + k as f64 * 0.25).unwrap();
        let b = arch.bound();
        let mut p = NetworkParams::init(arch, k);
        // blow the weights up so the clamp is exercised
        p.gamma_mut().iter_mut().for_each(|g| *g *= 5.0);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
            if p.clipped_forward(&x).unwrap().abs() > b {
                violations += 1;
            }
        }
    }
    report(
        3,
        "sup-norm membership",
        violations == 0,
        format!("{violations} violations in 200000 evaluations"),
        t.elapsed(),
    )
}

fn c4_regression_curvature() -> Outcome {
    let t = Instant::now();
    let dgp = DgpConfig::ArArch(ArArchConfig::default_regression());
    let f0 = dgp.target().clone();
    let f = move |x: &[f64]| f0.eval_unchecked(x) + 0.2;
    let p = curvature_probe(&Criterion::LeastSquares, &f, &dgp, 100_000, 4).unwrap();
    let ok = (p.delta_q - 0.04).abs() <= 3.0 * p.delta_q_se && (p.l2_sq - 0.04).abs() < 1e-12;
    report(
        4,
        "regression curvature identity",
        ok,
        format!("ΔQ = {:.5} ± {:.5}, ‖f−f0‖² = {:.5}", p.delta_q, p.delta_q_se, p.l2_sq),
        t.elapsed(),
    )
}

/// Ten random smooth perturbations of the logistic target, kept inside `[-2, 2]`.
fn logistic_probes() -> Vec<dnn_sieve::estimator::CurvatureProbe> {
    let dgp = DgpConfig::LogisticAuto(LogisticAutoConfig::default_logistic());
    let mut rng = seed::rng(5);
    (0..10u64)
        .map(|k| {
            let (a, w1, w2, phase) = (
                rng.random_range(0.2..1.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
            let f0 = dgp.target().clone();
            let f =
                move |x: &[f64]| (f0.eval_unchecked(x) + a * (w1 * x[0] + w2 * x[1] + phase).sin()).clamp(-2.0, 2.0);
            curvature_probe(&Criterion::Logistic { bound: 2.0 }, &f, &dgp, 100_000, seed::derive(5, &[k])).unwrap()
        })
        .collect()
}

fn c5_logistic_sandwich(probes: &[dnn_sieve::estimator::CurvatureProbe], el: Duration) -> Outcome {
    let (c1, c2) = logistic_curvature_constants(2.0);
    let const_ok = (c1 - 0.008832).abs() < 1e-6 && c2 == 0.25;
    let inside = probes.iter().filter(|p| p.brackets(3.0)).count();
    let ratios: Vec<String> = probes.iter().map(|p| format!("{:.3}", p.ratio())).collect();
    report(
        5,
        "logistic curvature sandwich [c1, 1/4]",
        const_ok && inside == probes.len(),
        format!("c1 = {c1:.7}, {inside}/{} bracketed, ΔQ/‖f−f0‖² = [{}]", probes.len(), ratios.join(", ")),
        el,
    )
}

fn c6_dgp() -> Outcome {
    let t = Instant::now();
    let cfg = ArArchConfig::default_regression();
    let a = simulate_ar_arch(&cfg, 100_000, 61).unwrap();
    let far = ArArchConfig { initial: vec![25.0], ..cfg };
    let b = simulate_ar_arch(&far, 100_000, 62).unwrap();
    let ks = stats::ks_distance(a.y(), b.y());

    let lcfg = LogisticAutoConfig::default_logistic();
    let s = simulate_logistic_auto(&lcfg, 100_000, 63).unwrap();
    let bins = 10;
    let mut sum_y = vec![0.0; 2 * bins];
    let mut sum_p = vec![0.0; 2 * bins];
    let mut count = vec![0usize; 2 * bins];
    for (y, x) in s.iter() {
        let k = ((x[0] * bins as f64) as usize).min(bins - 1) + bins * (x[1] as usize);
        sum_y[k] += y;
        sum_p[k] += conditional_mean_logistic(&lcfg, x).unwrap();
        count[k] += 1;
    }
    let dev = (0..2 * bins)
        .filter(|&k| count[k] >= 500)
        .map(|k| ((sum_y[k] - sum_p[k]) / count[k] as f64).abs())
        .fold(0.0, f64::max);
    let used = count.iter().filter(|&&c| c >= 500).count();
    let el = t.elapsed();
    let ok = ks < 0.02 && dev < 0.03 && used > 0 && el < Duration::from_secs(60);
    report(
        6,
        "generator stationarity and calibration",
        ok,
        format!("KS = {ks:.4}, max bin deviation = {dev:.4} over {used} bins"),
        el,
    )
}

fn c7_tail() -> Outcome {
    let t = Instant::now();
    let v = tail_moment_gaussian(2.0);
    // 2 ∫_2^∞ y² φ(y) dy by composite Simpson on [2, 40] with 200000 panels
    let (a, b, m) = (2.0f64, 40.0f64, 200_000usize);
    let hstep = (b - a) / m as f64;
    let g = |y: f64| y * y * stats::norm_pdf(y);
    let mut acc = g(a) + g(b);
    for i in 1..m {
        acc += g(a + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let oracle = 2.0 * acc * hstep / 3.0;
    let normal = TailModel::Stationary(Marginal::Gaussian { mean: 0.0, sd: 1.0 });
    let grid = [100, 1000, 10_000];
    let growing = check_tail_condition(&normal, |n| (n as f64).powf(0.2), &grid).passed;
    let constant = check_tail_condition(&normal, |_| 2.0, &grid).passed;
    let ok = (v - 0.26146).abs() < 1e-5 && (v - oracle).abs() < 1e-5 && growing && !constant;
    report(
        7,
        "tail machinery",
        ok,
        format!("moment = {v:.6} (oracle {oracle:.6}); n^0.2 passes = {growing}, constant passes = {constant}"),
        t.elapsed(),
    )
}

fn c8_blocks() -> Outcome {
    let t = Instant::now();
    let mut bad = 0;
    let mut cases = 0;
    for n in 2..=64usize {
        for a in 1..=n / 2 {
            cases += 1;
            let p = block_partition(n, a).unwrap();
            let mut hits = vec![0u8; n];
            for r in p.t1.iter().chain(&p.t2).chain(std::iter::once(&p.tr)) {
                r.clone().for_each(|i| hits[i] += 1);
            }
            if hits.iter().any(|&h| h != 1) || p.t1.iter().chain(&p.t2).any(|r| r.len() != a) || p.tr.len() >= 2 * a {
                bad += 1;
            }
        }
    }
    let ex = block_partition(10, 2).unwrap();
    let one = |r: &std::ops::Range<usize>| r.clone().map(|i| i + 1).collect::<Vec<_>>();
    let example = ex.t1.iter().map(one).collect::<Vec<_>>() == vec![vec![1, 2], vec![5, 6]]
        && ex.t2.iter().map(one).collect::<Vec<_>>() == vec![vec![3, 4], vec![7, 8]]
        && one(&ex.tr) == vec![9, 10];
    report(
        8,
        "block partition",
        bad == 0 && example,
        format!("{cases} (n, a) pairs, {bad} bad; n=10, a=2 example matches = {example}"),
        t.elapsed(),
    )
}

fn medians(r: &RateReport) -> Vec<f64> {
    r.grid.iter().map(|g| g.median_population_l2).collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn c9_regression_rate() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::from_json(include_str!("configs/rate_regression.json")).unwrap();
    assert_eq!(cfg.setting, Setting::RegressionStationary);
    let rep = run_rate_experiment(&cfg).unwrap();
    let el = t.elapsed();
    let m = medians(&rep);
    let strictly = m.windows(2).all(|w| w[1] < w[0]);
    let band = (-0.60..=-0.05).contains(&rep.fitted_slope);
    let ok = strictly && band && el < Duration::from_secs(30 * 60);
    report(
        9,
        "regression rate experiment",
        ok,
        format!(
            "medians [{}], slope {:.3} ± {:.3} (theory {:.3})",
            fmt(&m),
            rep.fitted_slope,
            rep.slope_se,
            rep.theoretical_exponent
        ),
        el,
    )
}

fn c10_logistic_rate() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::from_json(include_str!("configs/rate_logistic.json")).unwrap();
    assert_eq!(cfg.setting, Setting::Logistic);
    assert_eq!(cfg.dgp.input_dim(), 2);
    let rep = run_rate_experiment(&cfg).unwrap();
    let m = medians(&rep);
    let ratio = m[m.len() - 1] / m[0];
    let ok = ratio <= 0.6 && rep.fitted_slope < -0.05;
    report(
        10,
        "logistic rate experiment",
        ok,
        format!("medians [{}], last/first = {ratio:.3}, slope {:.3} ± {:.3}", fmt(&m), rep.fitted_slope, rep.slope_se),
        t.elapsed(),
    )
}

fn c11_slope() -> Outcome {
    let t = Instant::now();
    let pts: Vec<(f64, f64)> =
        [256.0, 512.0, 1024.0, 2048.0, 4096.0, 8192.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.3))).collect();
    let exact = slope_fit(&pts).unwrap();
    // x = ln 10 · (1, 2, 3), y = ln(1, 0.5, 0.1): OLS slope = (y3 − y1) / (x3 − x1)
    let oracle = (0.1f64.ln() - 1f64.ln()) / (2.0 * 10f64.ln());
    let hand = slope_fit(&[(10.0, 1.0), (100.0, 0.5), (1000.0, 0.1)]).unwrap();
    let ok = (exact.slope + 0.3).abs() < 1e-12 && (hand.slope - oracle).abs() < 1e-3;
    report(
        11,
        "slope fitter",
        ok,
        format!("power-law error {:.1e}, OLS {:.6} vs oracle {oracle:.6}", (exact.slope + 0.3).abs(), hand.slope),
        t.elapsed(),
    )
}

fn c12_determinism() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, include_str!("configs/rate_small.json")).unwrap();
    let run = |out: &str, threads: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_dnn-sieve"))
            .args(["rate-experiment", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(dir.path().join(out))
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    run("a", "1");
    run("b", "2");
    let same = ["rows.csv", "plot.csv", "summary.json"]
        .iter()
        .all(|f| fs::read(dir.path().join("a").join(f)).unwrap() == fs::read(dir.path().join("b").join(f)).unwrap());
    report(
        12,
        "determinism of rate-experiment outputs",
        same,
        format!("rows.csv, plot.csv, summary.json identical = {same}"),
        t.elapsed(),
    )
}

fn main() {
    // Criterion 5 also prints a companion line with the sharp constant.
    let t = Instant::now();
    let probes = logistic_probes();
    let el5 = t.elapsed();
    let outcomes = vec![
        c1_param_count(),
        c2_gradients(),
        c3_sup_norm(),
        c4_regression_curvature(),
        c5_logistic_sandwich(&probes, el5),
        c6_dgp(),
        c7_tail(),
        c8_blocks(),
        c9_regression_rate(),
        c10_logistic_rate(),
        c11_slope(),
        c12_determinism(),
    ];
    let sharp = probes.iter().filter(|p| p.brackets_with(p.c1, p.c2_sharp, 3.0)).count();
    println!(
        "note criterion  5: with the sharp upper constant B²/8 = {} the sandwich holds for {sharp}/{} perturbations",
        probes[0].c2_sharp,
        probes.len()
    );

    let unexpected: Vec<u32> =
        outcomes.iter().filter(|o| o.passed == KNOWN_FAILURES.contains(&o.id)).map(|o| o.id).collect();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed; expected failures: {KNOWN_FAILURES:?}", outcomes.len());
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
