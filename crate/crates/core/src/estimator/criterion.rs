use serde::{Deserialize, Serialize};

use crate::dgp::logistic;
use crate::error::{Error, Result};

/// Per-observation loss `ℓ(z, f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `(y - f(x))²`
    LeastSquares,
    /// `-y B f(x) + ln(1 + e^{B f(x)})` with `y ∈ {0, 1}`.
    Logistic { bound: f64 },
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Criterion {
    pub fn logistic(bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::validation(format!("logistic scale must be positive, got {bound}")));
        }
        Ok(Criterion::Logistic { bound })
    }

    #[inline]
    pub fn loss(&self, y: f64, f: f64) -> f64 {
        match *self {
            Criterion::LeastSquares => (y - f) * (y - f),
            Criterion::Logistic { bound } => {
                let z = bound * f;
                -y * z + softplus(z)
            }
        }
    }

    /// `∂ℓ/∂f`.
    #[inline]
    pub fn derivative(&self, y: f64, f: f64) -> f64 {
        match *self {
            Criterion::LeastSquares => 2.0 * (f - y),
            Criterion::Logistic { bound } => bound * (logistic(bound * f) - y),
        }
    }

    /// Lipschitz envelope `m_n(z)` of `f ↦ ℓ(z, f)` over functions bounded by
    /// `sieve_bound`: `2(|y| + B)` for least squares, `2B` for logistic.
    pub fn lipschitz_envelope(&self, y: f64, sieve_bound: f64) -> f64 {
        match *self {
            Criterion::LeastSquares => 2.0 * (y.abs() + sieve_bound),
            Criterion::Logistic { bound } => 2.0 * bound,
        }
    }
}
