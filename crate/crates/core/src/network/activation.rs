use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A continuous piecewise-linear activation.
///
/// The function is pinned by its value at zero and the slope of each piece;
/// breakpoints separate the pieces, so `slopes.len() == breakpoints.len() + 1`.
/// Continuity holds by construction. At a breakpoint the derivative is taken
/// from the piece on its left (ReLU has derivative 0 at 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActivationRepr", into = "ActivationRepr")]
pub struct ActivationSpec {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    value_at_zero: f64,
    /// Function value at each breakpoint.
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ActivationRepr {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    value_at_zero: f64,
}

impl TryFrom<ActivationRepr> for ActivationSpec {
    type Error = Error;

    fn try_from(r: ActivationRepr) -> Result<Self> {
        ActivationSpec::new(r.breakpoints, r.slopes, r.value_at_zero)
    }
}

impl From<ActivationSpec> for ActivationRepr {
    fn from(a: ActivationSpec) -> Self {
        ActivationRepr { breakpoints: a.breakpoints, slopes: a.slopes, value_at_zero: a.value_at_zero }
    }
}

impl ActivationSpec {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, value_at_zero: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::validation(format!(
                "activation needs {} slopes for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                slopes.len()
            )));
        }
        if breakpoints.iter().chain(&slopes).any(|v| !v.is_finite()) || !value_at_zero.is_finite() {
            return Err(Error::validation("activation parameters must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("activation breakpoints must be strictly ascending"));
        }
        let mut spec = ActivationSpec { breakpoints, slopes, value_at_zero, knots: Vec::new() };
        spec.knots = spec.breakpoints.iter().map(|&b| spec.value_at_zero + spec.integral_from_zero(b)).collect();
        Ok(spec)
    }

    pub fn relu() -> Self {
        Self::leaky_relu(0.0)
    }

    /// `x ↦ max(c·x, x)` for `c < 1`; slope `c` left of zero.
    pub fn leaky_relu(c: f64) -> Self {
        Self::new(vec![0.0], vec![c, 1.0], 0.0).expect("leaky relu is well formed")
    }

    pub fn identity() -> Self {
        Self::new(Vec::new(), vec![1.0], 0.0).expect("identity is well formed")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    // Signed integral of the slope function over [0, x].
    fn integral_from_zero(&self, x: f64) -> f64 {
        let (lo, hi, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
        let mut total = 0.0;
        for (j, &s) in self.slopes.iter().enumerate() {
            let left = if j == 0 { f64::NEG_INFINITY } else { self.breakpoints[j - 1] };
            let right = self.breakpoints.get(j).copied().unwrap_or(f64::INFINITY);
            let overlap = hi.min(right) - lo.max(left);
            if overlap > 0.0 {
                total += s * overlap;
            }
        }
        sign * total
    }

    #[inline]
    fn piece(&self, x: f64) -> usize {
        match self.breakpoints.len() {
            0 => 0,
            1 => usize::from(x > self.breakpoints[0]),
            _ => self.breakpoints.partition_point(|&b| b < x),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.value_at_zero + self.slopes[0] * x;
        }
        let j = self.piece(x);
        if j == 0 {
            self.knots[0] + self.slopes[0] * (x - self.breakpoints[0])
        } else {
            self.knots[j - 1] + self.slopes[j] * (x - self.breakpoints[j - 1])
        }
    }

    /// `(breakpoint, value there, left slope, right slope)` for activations
    /// with exactly one breakpoint, such as ReLU.
    #[inline]
    pub(crate) fn single_kink(&self) -> Option<(f64, f64, f64, f64)> {
        (self.breakpoints.len() == 1).then(|| (self.breakpoints[0], self.knots[0], self.slopes[0], self.slopes[1]))
    }

    /// Derivative with the left-piece convention at breakpoints.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.slopes[self.piece(x)]
    }

    /// Distance from `x` to the nearest breakpoint (infinite when there are none).
    pub fn distance_to_kink(&self, x: f64) -> f64 {
        self.breakpoints.iter().map(|b| (x - b).abs()).fold(f64::INFINITY, f64::min)
    }
}
