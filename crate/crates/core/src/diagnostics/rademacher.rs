use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::{batch_value_and_gradient, Criterion};
use crate::network::{ArchitectureSpec, NetworkParams};
use crate::sample::TimeSeriesSample;
use crate::{seed, stats};

pub const HEURISTIC_LABEL: &str = "heuristic lower bound";

/// Inner ascent used to search the class for each sign vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RademacherSettings {
    pub iterations: usize,
    /// Keep every `record_every`-th iterate as a candidate.
    pub record_every: usize,
    pub step: f64,
}

impl Default for RademacherSettings {
    fn default() -> Self {
        RademacherSettings { iterations: 150, record_every: 10, step: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub radius: f64,
    pub value: f64,
    pub se: f64,
    pub per_draw: Vec<f64>,
    pub label: String,
}

/// Estimates `E_ξ sup_f (1/n) Σ ξ_t (f(x_t) - f0(x_t))` over networks of
/// `arch` within empirical radius `radius` of `f0`.
///
/// The supremum is searched, not solved: for each sign vector a network is
/// fitted to `B ξ` by a short Adam run and its iterates, plus the constants
/// `±B`, are projected onto the ball by shrinking toward `f0`. The result is
/// a heuristic lower bound on the true complexity.
pub fn empirical_rademacher(
    arch: &ArchitectureSpec,
    f0: &(dyn Fn(&[f64]) -> f64 + Sync),
    radius: f64,
    sample: &TimeSeriesSample,
    draws: usize,
    seed: u64,
    settings: &RademacherSettings,
) -> Result<RademacherEstimate> {
    let mut v = empirical_rademacher_radii(arch, f0, &[radius], sample, draws, seed, settings)?;
    Ok(v.remove(0))
}

/// [`empirical_rademacher`] at several radii sharing the same sign vectors and
/// candidates, so the estimates are nondecreasing in the radius.
pub fn empirical_rademacher_radii(
    arch: &ArchitectureSpec,
    f0: &(dyn Fn(&[f64]) -> f64 + Sync),
    radii: &[f64],
    sample: &TimeSeriesSample,
    draws: usize,
    seed: u64,
    settings: &RademacherSettings,
) -> Result<Vec<RademacherEstimate>> {
    if sample.is_empty() {
        return Err(Error::precondition("sample is empty"));
    }
    check_dim(arch.input_dim(), sample.dim())?;
    if draws == 0 || settings.record_every == 0 || !(settings.step > 0.0) {
        return Err(Error::validation("need draws > 0, record_every > 0 and step > 0"));
    }
    if radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::validation("radii must be nonnegative"));
    }
    let n = sample.len();
    let base: Vec<f64> = sample.xs().map(f0).collect();

    let per_draw: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = seed::rng(seed::derive(seed, &[d as u64, 0]));
            let xi: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let cands = candidates(arch, sample, &xi, &base, seed::derive(seed, &[d as u64, 1]), settings);
            radii
                .iter()
                .map(|&r| {
                    cands
                        .iter()
                        .map(|(corr, norm)| if *norm > 0.0 { corr * (r / norm).min(1.0) } else { 0.0 })
                        .fold(0.0f64, f64::max)
                })
                .collect()
        })
        .collect();

    Ok(radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let vals: Vec<f64> = per_draw.iter().map(|v| v[i]).collect();
            let (value, se) = stats::mean_and_se(&vals);
            RademacherEstimate { radius: r, value, se, per_draw: vals, label: HEURISTIC_LABEL.into() }
        })
        .collect())
}

/// `(mean(ξ h), ‖h‖_n)` for each candidate `h = g - f0`.
fn candidates(
    arch: &ArchitectureSpec,
    sample: &TimeSeriesSample,
    xi: &[f64],
    base: &[f64],
    init_seed: u64,
    settings: &RademacherSettings,
) -> Vec<(f64, f64)> {
    let n = xi.len() as f64;
    let score = |g: &mut dyn FnMut(&[f64]) -> f64| {
        let mut corr = 0.0;
        let mut sq = 0.0;
        for (t, x) in sample.xs().enumerate() {
            let h = g(x) - base[t];
            corr += xi[t] * h;
            sq += h * h;
        }
        (corr / n, (sq / n).sqrt())
    };
    let b = arch.bound();
    let mut out = vec![score(&mut |_| b), score(&mut |_| -b)];

    let target = TimeSeriesSample::new(
        sample.dim(),
        xi.iter().map(|s| s * b).collect(),
        sample.xs().flatten().copied().collect(),
    )
    .expect("dimensions come from an existing sample");
    let mut params = NetworkParams::init(arch.clone(), init_seed);
    let w = params.gamma().len();
    let (mut grad, mut m, mut v) = (vec![0.0; w], vec![0.0; w], vec![0.0; w]);
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    for it in 1..=settings.iterations {
        if (it - 1) % settings.record_every == 0 {
            let mut scratch = params.scratch();
            out.push(score(&mut |x| params.eval_with(x, &mut scratch)));
        }
        let value = batch_value_and_gradient(&Criterion::LeastSquares, &params, &target, &mut grad);
        if !value.is_finite() {
            break;
        }
        let (c1, c2) = (1.0 - b1.powi(it as i32), 1.0 - b2.powi(it as i32));
        for (i, g) in params.gamma_mut().iter_mut().enumerate() {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            *g -= settings.step * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
    }
    let mut scratch = params.scratch();
    out.push(score(&mut |x| params.eval_with(x, &mut scratch)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeSeriesSample {
        TimeSeriesSample::new(1, vec![0.0; n], (0..n).map(|t| -1.0 + 2.0 * t as f64 / n as f64).collect()).unwrap()
    }

    fn quick() -> RademacherSettings {
        RademacherSettings { iterations: 40, record_every: 5, step: 0.05 }
    }

    #[test]
    fn zero_radius_is_zero() {
        let arch = ArchitectureSpec::uniform(1, 1, 4, 2.0).unwrap();
        let e = empirical_rademacher(&arch, &|x: &[f64]| x[0].sin(), 0.0, &grid(20), 5, 1, &quick()).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.label, HEURISTIC_LABEL);
    }

    #[test]
    fn constants_give_the_mean_sign_bound() {
        // E|mean ξ| for n = 16 by enumeration over the number of +1 signs.
        let n = 16usize;
        let mut binom = vec![1.0f64; n + 1];
        for k in 1..=n {
            binom[k] = binom[k - 1] * (n + 1 - k) as f64 / k as f64;
        }
        let oracle =
            (0..=n).map(|k| binom[k] * ((2 * k) as f64 - n as f64).abs() / n as f64).sum::<f64>() / 2f64.powi(n as i32);
        let c = 0.5;
        let arch = ArchitectureSpec::uniform(1, 1, 3, 2.0).unwrap();
        let e = empirical_rademacher(&arch, &|_: &[f64]| 0.0, c, &grid(n), 400, 7, &quick()).unwrap();
        assert!(e.value >= c * oracle - 3.0 * e.se, "{} vs {}", e.value, c * oracle);
        assert!(e.per_draw.iter().all(|v| *v >= 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn nondecreasing_in_radius(r1 in 0.0f64..1.0, extra in 0.0f64..1.0, seed in any::<u64>()) {
            let arch = ArchitectureSpec::uniform(1, 1, 3, 2.0).unwrap();
            let f0 = |x: &[f64]| 0.5 * x[0];
            let s = grid(24);
            let a = empirical_rademacher(&arch, &f0, r1, &s, 3, seed, &quick()).unwrap();
            let b = empirical_rademacher(&arch, &f0, r1 + extra, &s, 3, seed, &quick()).unwrap();
            prop_assert!(a.value <= b.value);
            prop_assert!(a.value >= 0.0);
        }
    }
}
