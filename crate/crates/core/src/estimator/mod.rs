//! Sieve extremum estimation: criteria, fitting, and error metrics.

mod criterion;
mod curvature;
mod fit;

pub use criterion::{softplus, Criterion};
pub use curvature::{curvature_probe, logistic_curvature_constants, CurvatureProbe};
pub(crate) use fit::batch_value_and_gradient;
pub use fit::{empirical_criterion, fit_sieve, FitResult, OptimizerSettings, OptimizerTrace};

use rayon::prelude::*;

use crate::dgp::HolderTarget;
use crate::error::{check_dim, Error, Result};
use crate::network::NetworkParams;
use crate::sample::TimeSeriesSample;

const CHUNK: usize = 256;

/// `‖f̂ - f0‖_{2,n}`: root-mean-square of the clipped network minus the
/// target over the training covariates.
pub fn empirical_l2(fhat: &NetworkParams, f0: &HolderTarget, sample: &TimeSeriesSample) -> Result<f64> {
    rms_gap(fhat, f0, sample)
}

/// Monte Carlo `‖f̂ - f0‖_{L2}` over the covariates of a long, independent
/// evaluation path. Same formula as [`empirical_l2`].
pub fn population_l2(fhat: &NetworkParams, f0: &HolderTarget, eval: &TimeSeriesSample) -> Result<f64> {
    rms_gap(fhat, f0, eval)
}

fn rms_gap(fhat: &NetworkParams, f0: &HolderTarget, sample: &TimeSeriesSample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::precondition("sample is empty"));
    }
    check_dim(fhat.arch().input_dim(), sample.dim())?;
    check_dim(f0.dim, sample.dim())?;
    let n = sample.len();
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut scratch = fhat.scratch();
            (c * CHUNK..((c + 1) * CHUNK).min(n))
                .map(|t| {
                    let x = sample.x(t);
                    let e = fhat.eval_with(x, &mut scratch) - f0.eval_unchecked(x);
                    e * e
                })
                .sum::<f64>()
        })
        .collect();
    Ok((parts.iter().sum::<f64>() / n as f64).sqrt())
}
