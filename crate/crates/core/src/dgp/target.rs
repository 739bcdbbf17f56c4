use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Target function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum TargetKind {
    /// `Π_j sin(x_j)`
    ProductSine,
    /// `cos((1/d) Σ_j x_j)`
    ScaledCosine,
    /// Constant function.
    Constant { value: f64 },
    /// Piecewise-linear interpolation of `values` at ascending `knots` in the
    /// single coordinate `coord` (0-based), held flat outside the knots.
    Table { coord: usize, knots: Vec<f64>, values: Vec<f64> },
}

/// A target `f0` on `R^d` with claimed Hölder smoothness `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderTarget {
    #[serde(flatten)]
    pub kind: TargetKind,
    pub dim: usize,
    #[serde(default = "default_smoothness")]
    pub smoothness: usize,
}

fn default_smoothness() -> usize {
    2
}

impl HolderTarget {
    pub fn new(kind: TargetKind, dim: usize, smoothness: usize) -> Result<Self> {
        let t = HolderTarget { kind, dim, smoothness };
        t.validate()?;
        Ok(t)
    }

    pub fn product_sine(dim: usize) -> Self {
        HolderTarget { kind: TargetKind::ProductSine, dim, smoothness: 2 }
    }

    pub fn scaled_cosine(dim: usize) -> Self {
        HolderTarget { kind: TargetKind::ScaledCosine, dim, smoothness: 2 }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        HolderTarget { kind: TargetKind::Constant { value }, dim, smoothness: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::validation("target dimension must be positive"));
        }
        match &self.kind {
            TargetKind::Constant { value } if !value.is_finite() => {
                Err(Error::validation("constant target must be finite"))
            }
            TargetKind::Table { coord, knots, values } => {
                if *coord >= self.dim {
                    return Err(Error::validation("table coordinate out of range"));
                }
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(Error::validation("table needs matching nonempty knots and values"));
                }
                if knots.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::validation("table knots must be strictly ascending"));
                }
                if knots.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::validation("table entries must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Short identifier used in sample metadata.
    pub fn id(&self) -> &'static str {
        match self.kind {
            TargetKind::ProductSine => "product_sine",
            TargetKind::ScaledCosine => "scaled_cosine",
            TargetKind::Constant { .. } => "constant",
            TargetKind::Table { .. } => "table",
        }
    }

    /// `sup |f0|`; every library target is bounded.
    pub fn sup_abs(&self) -> f64 {
        match &self.kind {
            TargetKind::ProductSine | TargetKind::ScaledCosine => 1.0,
            TargetKind::Constant { value } => value.abs(),
            TargetKind::Table { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            TargetKind::ProductSine => x.iter().map(|v| v.sin()).product(),
            TargetKind::ScaledCosine => (x.iter().sum::<f64>() / x.len() as f64).cos(),
            TargetKind::Constant { value } => *value,
            TargetKind::Table { coord, knots, values } => {
                let v = x[*coord];
                let j = knots.partition_point(|&k| k <= v);
                if j == 0 {
                    values[0]
                } else if j == knots.len() {
                    values[knots.len() - 1]
                } else {
                    let w = (v - knots[j - 1]) / (knots[j] - knots[j - 1]);
                    values[j - 1] + w * (values[j] - values[j - 1])
                }
            }
        }
    }
}

/// Root-mean-square of `f0 - g` over the rows of `xs`, a Monte Carlo proxy
/// for `‖f0 - g‖_{L2(P_X)}`.
pub fn true_l2_distance<'a, G, I>(f0: &HolderTarget, g: G, xs: I) -> Result<f64>
where
    G: Fn(&[f64]) -> f64,
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for x in xs {
        let d = f0.eval(x)? - g(x);
        total += d * d;
        count += 1;
    }
    if count == 0 {
        return Err(Error::precondition("evaluation sample is empty"));
    }
    Ok((total / count as f64).sqrt())
}
