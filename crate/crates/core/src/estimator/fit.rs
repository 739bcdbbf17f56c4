use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::criterion::Criterion;
use crate::error::{check_dim, Error, Result};
use crate::network::{ArchitectureSpec, NetworkParams};
use crate::sample::TimeSeriesSample;
use crate::seed;

/// Rows per parallel work unit. Fixed so sums are reduced in the same order
/// whatever the thread count.
const CHUNK: usize = 256;

/// Backtracking halvings before the step is abandoned.
const MAX_HALVINGS: u32 = 30;

/// Full-batch Adam settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub step: f64,
    pub max_iter: usize,
    /// Stop when the best criterion improved by less than `rel_tol` (relative)
    /// over the last `patience` iterations.
    pub rel_tol: f64,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Backtrack on the step size so the criterion never increases.
    pub monotone: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            step: 1e-2,
            max_iter: 5000,
            rel_tol: 1e-9,
            patience: 50,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            monotone: true,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || self.max_iter == 0 || self.patience == 0 {
            return Err(Error::validation("optimizer needs step > 0, max_iter > 0 and patience > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::validation("optimizer needs beta1, beta2 in [0, 1) and eps > 0"));
        }
        Ok(())
    }
}

/// Per-restart outcome summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    /// Final criterion per restart; `None` for diverged restarts.
    pub final_values: Vec<Option<f64>>,
    /// Lowest criterion seen along each restart's path.
    pub best_values: Vec<Option<f64>>,
    pub iterations: Vec<usize>,
    /// Final value minus the winner's final value, for surviving restarts.
    pub gaps: Vec<f64>,
    pub discarded: usize,
    pub winner: usize,
    /// Criterion after every accepted iteration of the winning restart.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: NetworkParams,
    pub empirical_criterion: f64,
    /// Plug-in gap proxy: the winner's final criterion minus the lowest
    /// criterion observed along any restart's path. Never negative.
    pub theta_n: f64,
    pub restarts_used: usize,
    pub trace: OptimizerTrace,
}

/// Mean loss of the clipped network over the sample.
pub fn empirical_criterion(crit: &Criterion, params: &NetworkParams, sample: &TimeSeriesSample) -> Result<f64> {
    check_inputs(params.arch(), sample)?;
    Ok(batch_value(crit, params, sample))
}

fn check_inputs(arch: &ArchitectureSpec, sample: &TimeSeriesSample) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::precondition("sample is empty"));
    }
    check_dim(arch.input_dim(), sample.dim())
}

fn batch_value(crit: &Criterion, params: &NetworkParams, sample: &TimeSeriesSample) -> f64 {
    let n = sample.len();
    let d = sample.dim();
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut bs = params.batch_scratch(CHUNK);
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
            let out = params.forward_batch(&sample.x_block()[lo * d..hi * d], hi - lo, &mut bs);
            sample.y()[lo..hi].iter().zip(out).map(|(&y, &f)| crit.loss(y, f)).sum::<f64>()
        })
        .collect();
    parts.iter().sum::<f64>() / n as f64
}

/// Mean loss and its gradient, written into `grad`.
pub(crate) fn batch_value_and_gradient(
    crit: &Criterion,
    params: &NetworkParams,
    sample: &TimeSeriesSample,
    grad: &mut [f64],
) -> f64 {
    let n = sample.len();
    let d = sample.dim();
    let w = grad.len();
    let parts: Vec<(f64, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut bs = params.batch_scratch(CHUNK);
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
            let ys = &sample.y()[lo..hi];
            let out = params.forward_batch(&sample.x_block()[lo * d..hi * d], hi - lo, &mut bs);
            let total = ys.iter().zip(out).map(|(&y, &f)| crit.loss(y, f)).sum::<f64>();
            let up: Vec<f64> = ys.iter().zip(out).map(|(&y, &f)| crit.derivative(y, f)).collect();
            let mut g = vec![0.0; w];
            params.backprop_batch(&up, &mut bs, &mut g);
            (total, g)
        })
        .collect();
    grad.fill(0.0);
    let mut total = 0.0;
    for (v, g) in &parts {
        total += v;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let nf = n as f64;
    grad.iter_mut().for_each(|g| *g /= nf);
    total / nf
}

struct Run {
    params: NetworkParams,
    final_value: f64,
    best_value: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn optimize(
    crit: &Criterion,
    mut params: NetworkParams,
    sample: &TimeSeriesSample,
    opt: &OptimizerSettings,
) -> Option<Run> {
    let w = params.gamma().len();
    let mut grad = vec![0.0; w];
    let mut value = batch_value_and_gradient(crit, &params, sample, &mut grad);
    if !value.is_finite() {
        return None;
    }
    let mut m = vec![0.0; w];
    let mut v = vec![0.0; w];
    let mut dir = vec![0.0; w];
    let mut cand_grad = vec![0.0; w];
    let mut history = vec![value];
    let mut best = value;
    let mut best_history = vec![value];
    let mut scale = 1.0f64;
    let mut iterations = 0;
    // Adam step counter for bias correction; restarts from 1 after a moment reset.
    let mut t = 0i32;

    for it in 1..=opt.max_iter {
        iterations = it;
        t += 1;
        let c1 = 1.0 - opt.beta1.powi(t);
        let c2 = 1.0 - opt.beta2.powi(t);
        for i in 0..w {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
            dir[i] = (m[i] / c1) / ((v[i] / c2).sqrt() + opt.eps);
        }
        let mut accepted = None;
        let mut halvings = 0;
        loop {
            let mut cand = params.clone();
            for (g, d) in cand.gamma_mut().iter_mut().zip(&dir) {
                *g -= opt.step * scale * d;
            }
            let cv = batch_value_and_gradient(crit, &cand, sample, &mut cand_grad);
            if !cv.is_finite() && !opt.monotone {
                return None;
            }
            if !opt.monotone || cv <= value {
                accepted = Some((cand, cv));
                break;
            }
            scale *= 0.5;
            halvings += 1;
            if halvings == MAX_HALVINGS {
                break;
            }
        }
        let Some((cand, cv)) = accepted else {
            if t == 1 {
                // even a fresh moment estimate gives no decrease
                break;
            }
            // stale momentum no longer points downhill: forget it and retry
            m.fill(0.0);
            v.fill(0.0);
            t = 0;
            scale = 1.0;
            continue;
        };
        if opt.monotone && halvings == 0 {
            scale = (scale * 2.0).min(1.0);
        }
        params = cand;
        value = cv;
        std::mem::swap(&mut grad, &mut cand_grad);
        history.push(value);
        best = best.min(value);
        best_history.push(best);

        if value == 0.0 {
            break;
        }
        if best_history.len() > opt.patience {
            let old = best_history[best_history.len() - 1 - opt.patience];
            if old - best < opt.rel_tol * old.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    Some(Run { params, final_value: value, best_value: best, iterations, history })
}

/// Fits the sieve estimator: `restarts` independently initialized full-batch
/// Adam runs, keeping the run with the lowest final criterion. Runs that
/// produce a non-finite criterion are discarded and counted.
pub fn fit_sieve(
    crit: &Criterion,
    arch: &ArchitectureSpec,
    sample: &TimeSeriesSample,
    opt: &OptimizerSettings,
    restarts: usize,
    seed: u64,
) -> Result<FitResult> {
    check_inputs(arch, sample)?;
    if sample.len() < 2 {
        return Err(Error::precondition("need at least two observations"));
    }
    if restarts == 0 {
        return Err(Error::validation("need at least one restart"));
    }
    opt.validate()?;

    let runs: Vec<Option<Run>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let init = NetworkParams::init(arch.clone(), seed::derive(seed, &[r as u64]));
            optimize(crit, init, sample, opt)
        })
        .collect();

    let winner = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().map(|r| (i, r.final_value)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Optimization(format!("all {restarts} restarts diverged")))?;

    let lowest_seen = runs.iter().flatten().map(|r| r.best_value).fold(f64::INFINITY, f64::min);
    let winner_value = runs[winner].as_ref().unwrap().final_value;

    let trace = OptimizerTrace {
        final_values: runs.iter().map(|r| r.as_ref().map(|r| r.final_value)).collect(),
        best_values: runs.iter().map(|r| r.as_ref().map(|r| r.best_value)).collect(),
        iterations: runs.iter().map(|r| r.as_ref().map_or(0, |r| r.iterations)).collect(),
        gaps: runs.iter().flatten().map(|r| r.final_value - winner_value).collect(),
        discarded: runs.iter().filter(|r| r.is_none()).count(),
        winner,
        history: Vec::new(),
    };
    let mut runs = runs;
    let best = runs.swap_remove(winner).unwrap();
    let empirical = batch_value(crit, &best.params, sample);
    Ok(FitResult {
        params: best.params,
        empirical_criterion: empirical,
        theta_n: (winner_value - lowest_seen).max(0.0),
        restarts_used: restarts,
        trace: OptimizerTrace { history: best.history, ..trace },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ActivationSpec;

    fn line_sample(n: usize, f: impl Fn(f64) -> f64) -> TimeSeriesSample {
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        TimeSeriesSample::new(1, xs.iter().map(|&x| f(x)).collect(), xs).unwrap()
    }

    #[test]
    fn criterion_examples() {
        let arch = ArchitectureSpec::uniform(1, 1, 3, 2.0).unwrap();
        let zero = NetworkParams::zeros(arch.clone());
        let ones = line_sample(10, |_| 1.0);
        assert_eq!(empirical_criterion(&Criterion::LeastSquares, &zero, &ones).unwrap(), 1.0);
        let labels = line_sample(10, |x| f64::from(u8::from(x > 0.0)));
        let v = empirical_criterion(&Criterion::Logistic { bound: 2.0 }, &zero, &labels).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        // relu(x) - relu(-x) interpolates y = x exactly
        let arch2 = ArchitectureSpec::uniform(1, 1, 2, 2.0).unwrap();
        let ident = NetworkParams::new(arch2, vec![0.0, 1.0, 0.0, -1.0, 0.0, 1.0, -1.0]).unwrap();
        let lin = line_sample(25, |x| x);
        assert!(empirical_criterion(&Criterion::LeastSquares, &ident, &lin).unwrap() < 1e-30);
    }

    #[test]
    fn criterion_input_errors() {
        let arch = ArchitectureSpec::uniform(2, 1, 3, 2.0).unwrap();
        let p = NetworkParams::zeros(arch.clone());
        let s = line_sample(5, |x| x);
        assert!(empirical_criterion(&Criterion::LeastSquares, &p, &s).is_err());
        let empty = TimeSeriesSample::new(2, vec![], vec![]).unwrap();
        assert!(empirical_criterion(&Criterion::LeastSquares, &p, &empty).is_err());
        assert!(fit_sieve(&Criterion::LeastSquares, &arch, &empty, &OptimizerSettings::default(), 1, 0).is_err());
    }

    #[test]
    fn batch_gradient_matches_finite_differences() {
        let act = ActivationSpec::leaky_relu(0.2);
        let arch = ArchitectureSpec::new(1, vec![4, 3], 5.0, act).unwrap();
        let p = NetworkParams::init(arch, 4);
        let s = line_sample(37, |x| (3.0 * x).sin());
        for crit in [Criterion::LeastSquares, Criterion::Logistic { bound: 2.0 }] {
            let mut g = vec![0.0; p.gamma().len()];
            batch_value_and_gradient(&crit, &p, &s, &mut g);
            let h = 1e-6;
            for (i, &gi) in g.iter().enumerate() {
                let mut a = p.clone();
                a.gamma_mut()[i] += h;
                let mut b = p.clone();
                b.gamma_mut()[i] -= h;
                let fd = (batch_value(&crit, &a, &s) - batch_value(&crit, &b, &s)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-5 * fd.abs().max(1.0), "{i}: {fd} vs {gi}");
            }
        }
    }

    #[test]
    fn fits_zero_response() {
        let arch = ArchitectureSpec::uniform(1, 2, 4, 2.0).unwrap();
        let s = line_sample(64, |_| 0.0);
        let fit = fit_sieve(&Criterion::LeastSquares, &arch, &s, &OptimizerSettings::default(), 2, 1).unwrap();
        assert!(fit.empirical_criterion <= 1e-6, "{}", fit.empirical_criterion);
    }

    #[test]
    fn fits_identity_exactly_representable() {
        let arch = ArchitectureSpec::uniform(1, 1, 4, 2.0).unwrap();
        let s = line_sample(128, |x| x);
        let fit = fit_sieve(&Criterion::LeastSquares, &arch, &s, &OptimizerSettings::default(), 3, 2).unwrap();
        assert!(fit.empirical_criterion <= 1e-4, "{}", fit.empirical_criterion);
        assert!(fit.theta_n >= 0.0);
    }

    #[test]
    fn fit_is_deterministic_and_monotone() {
        let arch = ArchitectureSpec::uniform(1, 2, 5, 2.0).unwrap();
        let s = line_sample(100, |x| (4.0 * x).sin() * 0.8);
        let opt = OptimizerSettings { max_iter: 400, ..Default::default() };
        let a = fit_sieve(&Criterion::LeastSquares, &arch, &s, &opt, 3, 9).unwrap();
        let b = fit_sieve(&Criterion::LeastSquares, &arch, &s, &opt, 3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.trace.history.last().copied(), Some(a.empirical_criterion));
        assert!(a.trace.gaps.iter().all(|g| *g >= 0.0));
    }

    #[test]
    fn least_squares_fit_beats_constant_mean() {
        let arch = ArchitectureSpec::uniform(1, 2, 6, 2.0).unwrap();
        let s = line_sample(200, |x| x * x - 0.3 + 0.1 * (17.0 * x).sin());
        let fit = fit_sieve(&Criterion::LeastSquares, &arch, &s, &OptimizerSettings::default(), 2, 5).unwrap();
        let mean = crate::stats::mean(s.y());
        let constant = NetworkParams::constant(arch, mean);
        let base = empirical_criterion(&Criterion::LeastSquares, &constant, &s).unwrap();
        assert!(fit.empirical_criterion <= base);
    }

    #[test]
    fn divergent_restarts_are_counted() {
        let arch = ArchitectureSpec::uniform(1, 1, 2, 2.0).unwrap();
        let s = line_sample(10, |x| if x > 0.5 { f64::NAN } else { 0.0 });
        let err = fit_sieve(&Criterion::LeastSquares, &arch, &s, &OptimizerSettings::default(), 2, 0).unwrap_err();
        assert!(matches!(err, Error::Optimization(_)));
    }
}
