//! Index and statistics machinery mirroring the independent-blocks argument,
//! a heuristic empirical Rademacher complexity, and truncation diagnostics.

mod blocks;
mod rademacher;

pub use blocks::{block_norm, block_partition, BlockNorm, BlockPartition};
pub use rademacher::{empirical_rademacher, empirical_rademacher_radii, RademacherEstimate, RademacherSettings};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Criterion;
use crate::sample::TimeSeriesSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub bound: f64,
    pub max_abs_y: f64,
    /// `#{t : |y_t| ≥ B_n}`
    pub exceed_count: usize,
    /// `max_t m_n(z_t)`
    pub m_n_max: f64,
    /// `(1/n) Σ y_t² 1{|y_t| ≥ B_n}`
    pub tail_moment_hat: f64,
}

pub fn truncation_report(sample: &TimeSeriesSample, bound: f64, crit: &Criterion) -> Result<TruncationReport> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::validation(format!("B_n must be positive and finite, got {bound}")));
    }
    let y = sample.y();
    let max_abs_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let exceed: Vec<f64> = y.iter().copied().filter(|v| v.abs() >= bound).collect();
    let tail_moment_hat = if y.is_empty() { 0.0 } else { exceed.iter().map(|v| v * v).sum::<f64>() / y.len() as f64 };
    Ok(TruncationReport {
        bound,
        max_abs_y,
        exceed_count: exceed.len(),
        m_n_max: crit.lipschitz_envelope(max_abs_y, bound),
        tail_moment_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ys(v: &[f64]) -> TimeSeriesSample {
        TimeSeriesSample::new(1, v.to_vec(), vec![0.0; v.len()]).unwrap()
    }

    #[test]
    fn truncation_example() {
        let r = truncation_report(&ys(&[1.0, -3.0, 2.0]), 2.5, &Criterion::LeastSquares).unwrap();
        assert_eq!(r.max_abs_y, 3.0);
        assert_eq!(r.exceed_count, 1);
        assert_eq!(r.m_n_max, 11.0);
        assert_eq!(r.tail_moment_hat, 3.0);
    }

    #[test]
    fn nothing_exceeds() {
        let r = truncation_report(&ys(&[0.1, -0.2]), 1.0, &Criterion::LeastSquares).unwrap();
        assert_eq!((r.exceed_count, r.tail_moment_hat), (0, 0.0));
    }

    #[test]
    fn logistic_envelope_is_constant() {
        let r = truncation_report(&ys(&[0.0, 1.0, 1.0]), 2.0, &Criterion::Logistic { bound: 2.0 }).unwrap();
        assert_eq!(r.m_n_max, 4.0);
    }
}
