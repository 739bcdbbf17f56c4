use serde::{Deserialize, Serialize};

use super::criterion::Criterion;
use crate::dgp::DgpConfig;
use crate::error::{Error, Result};
use crate::stats;

const SE_BATCHES: usize = 100;

/// Monte Carlo check of the population curvature of the criterion around `f0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProbe {
    /// `E[ℓ(Z, f)] - E[ℓ(Z, f0)]`
    pub delta_q: f64,
    pub delta_q_se: f64,
    /// `‖f - f0‖²_{L2}`
    pub l2_sq: f64,
    pub c1: f64,
    pub c2: f64,
    /// `c1 ‖f - f0‖²`
    pub lower: f64,
    /// `c2 ‖f - f0‖²`
    pub upper: f64,
    /// Sharp upper constant for the criterion: `B²/8` for logistic, 1 for least squares.
    pub c2_sharp: f64,
}

impl CurvatureProbe {
    /// Whether `lower ≤ ΔQ ≤ upper` holds up to `k` Monte Carlo standard errors.
    pub fn brackets(&self, k: f64) -> bool {
        self.brackets_with(self.c1, self.c2, k)
    }

    pub fn brackets_with(&self, c1: f64, c2: f64, k: f64) -> bool {
        let slack = k * self.delta_q_se;
        c1 * self.l2_sq <= self.delta_q + slack && self.delta_q - slack <= c2 * self.l2_sq
    }

    pub fn ratio(&self) -> f64 {
        self.delta_q / self.l2_sq
    }
}

/// `(c1, c2)` for the logistic criterion with scale `B`:
/// `c1 = 1 / (2 (e^{B²} + e^{-B²} + 2))`, `c2 = 1/4`.
pub fn logistic_curvature_constants(bound: f64) -> (f64, f64) {
    let b2 = bound * bound;
    (1.0 / (2.0 * (b2.exp() + (-b2).exp() + 2.0)), 0.25)
}

/// Simulates `mc_n` observations from `dgp` and estimates the excess
/// population criterion of `f` over the generator's target together with
/// `‖f - f0‖²`. For least squares both constants are 1 (an identity); for
/// logistic they are [`logistic_curvature_constants`].
///
/// For the logistic criterion `f` must be bounded by `B` on the simulated covariates.
pub fn curvature_probe(
    crit: &Criterion,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dgp: &DgpConfig,
    mc_n: usize,
    seed: u64,
) -> Result<CurvatureProbe> {
    if mc_n < 2 {
        return Err(Error::validation("mc_n must be at least 2"));
    }
    let sample = dgp.simulate(mc_n, seed)?;
    let f0 = dgp.target();
    let mut diffs = Vec::with_capacity(mc_n);
    let mut sq = 0.0;
    for (y, x) in sample.iter() {
        let (a, b) = (f(x), f0.eval_unchecked(x));
        if let Criterion::Logistic { bound } = *crit {
            if a.abs() > bound {
                return Err(Error::precondition(format!("|f(x)| = {} exceeds B = {bound}", a.abs())));
            }
        }
        diffs.push(crit.loss(y, a) - crit.loss(y, b));
        sq += (a - b) * (a - b);
    }
    let (delta_q, delta_q_se) = stats::mean_and_batch_se(&diffs, SE_BATCHES);
    let l2_sq = sq / mc_n as f64;
    let (c1, c2, c2_sharp) = match *crit {
        Criterion::LeastSquares => (1.0, 1.0, 1.0),
        Criterion::Logistic { bound } => {
            let (c1, c2) = logistic_curvature_constants(bound);
            (c1, c2, bound * bound / 8.0)
        }
    };
    Ok(CurvatureProbe { delta_q, delta_q_se, l2_sq, c1, c2, lower: c1 * l2_sq, upper: c2 * l2_sq, c2_sharp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{ArArchConfig, LogisticAutoConfig};

    #[test]
    fn logistic_constants() {
        let (c1, c2) = logistic_curvature_constants(2.0);
        // 1 / (2 (e^4 + e^-4 + 2)) evaluated independently
        assert!((c1 - 0.008_831_4).abs() < 1e-7, "{c1}");
        assert_eq!(c2, 0.25);
    }

    #[test]
    fn regression_offset_identity() {
        let dgp = DgpConfig::ArArch(ArArchConfig::default_regression());
        let f0 = dgp.target().clone();
        let f = move |x: &[f64]| f0.eval_unchecked(x) + 0.2;
        let p = curvature_probe(&Criterion::LeastSquares, &f, &dgp, 100_000, 3).unwrap();
        assert!((p.l2_sq - 0.04).abs() < 1e-12);
        assert!((p.delta_q - 0.04).abs() <= 3.0 * p.delta_q_se, "{p:?}");
        assert!(p.brackets(3.0));
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let dgp = DgpConfig::LogisticAuto(LogisticAutoConfig::default_logistic());
        let f0 = dgp.target().clone();
        let f = move |x: &[f64]| f0.eval_unchecked(x);
        let p = curvature_probe(&Criterion::Logistic { bound: 2.0 }, &f, &dgp, 1000, 1).unwrap();
        assert_eq!(p.delta_q, 0.0);
        assert_eq!(p.l2_sq, 0.0);
    }

    #[test]
    fn logistic_sharp_bracket() {
        let dgp = DgpConfig::LogisticAuto(LogisticAutoConfig::default_logistic());
        let f0 = dgp.target().clone();
        let f = move |x: &[f64]| (f0.eval_unchecked(x) + 0.3 * x[0].sin()).clamp(-2.0, 2.0);
        let p = curvature_probe(&Criterion::Logistic { bound: 2.0 }, &f, &dgp, 50_000, 8).unwrap();
        assert!(p.delta_q > 0.0);
        assert!(p.brackets_with(p.c1, p.c2_sharp, 3.0), "{p:?}");
    }

    #[test]
    fn logistic_rejects_unbounded_f() {
        let dgp = DgpConfig::LogisticAuto(LogisticAutoConfig::default_logistic());
        let f = |_: &[f64]| 3.0;
        assert!(curvature_probe(&Criterion::Logistic { bound: 2.0 }, &f, &dgp, 100, 1).is_err());
    }
}
