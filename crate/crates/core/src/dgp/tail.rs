use serde::{Deserialize, Serialize};

use crate::stats::{norm_pdf, norm_sf};

/// `E[Y² 1{|Y| ≥ B}] = 2(B φ(B) + 1 - Φ(B))` for standard normal `Y`.
pub fn tail_moment_gaussian(bound: f64) -> f64 {
    let b = bound.max(0.0);
    2.0 * (b * norm_pdf(b) + norm_sf(b))
}

/// A stationary marginal law of `Y_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// Point mass.
    Degenerate {
        value: f64,
    },
}

impl Marginal {
    /// `P(|Y| > b)`.
    pub fn exceedance(&self, b: f64) -> f64 {
        match *self {
            Marginal::Gaussian { mean, sd } => gaussian_exceedance(mean, sd, b),
            Marginal::Degenerate { value } => f64::from(u8::from(value.abs() > b)),
        }
    }
}

fn gaussian_exceedance(mean: f64, sd: f64, b: f64) -> f64 {
    if sd == 0.0 {
        return f64::from(u8::from(mean.abs() >= b));
    }
    norm_sf((b - mean) / sd) + norm_sf((b + mean) / sd)
}

/// Distributional model for the envelope check.
pub enum TailModel<'a> {
    /// Stationary `Y_t`: checks `n P(|Y_1| > B_n)`.
    Stationary(Marginal),
    /// Jointly Gaussian, possibly nonstationary `Y_t ~ N(μ_t, σ_t²)`, `t ≥ 1`:
    /// checks `Σ_{t≤n} P(|Y_t| ≥ B_n)` and `min_t (B_n - |μ_t|) / σ_t`.
    Gaussian { mean: &'a dyn Fn(usize) -> f64, sd: &'a dyn Fn(usize) -> f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n_grid: Vec<usize>,
    pub bounds: Vec<f64>,
    /// `n P(|Y_1| > B_n)` or `Σ_t P(|Y_t| ≥ B_n)` per grid point.
    pub exceedance: Vec<f64>,
    /// Whether the exceedance statistic decreases along the grid (or is zero).
    pub exceedance_decreasing: bool,
    /// Minimal standardized threshold per grid point (Gaussian model only).
    pub standardized_threshold: Option<Vec<f64>>,
    pub threshold_increasing: Option<bool>,
    pub passed: bool,
}

fn decreasing_or_zero(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0)
}

/// Evaluates the envelope conditions along `n_grid` with `B_n = bound(n)`.
pub fn check_tail_condition(model: &TailModel<'_>, bound: impl Fn(usize) -> f64, n_grid: &[usize]) -> TailReport {
    let bounds: Vec<f64> = n_grid.iter().map(|&n| bound(n)).collect();
    match model {
        TailModel::Stationary(m) => {
            let exceedance: Vec<f64> = n_grid.iter().zip(&bounds).map(|(&n, &b)| n as f64 * m.exceedance(b)).collect();
            let dec = decreasing_or_zero(&exceedance);
            TailReport {
                n_grid: n_grid.to_vec(),
                bounds,
                exceedance,
                exceedance_decreasing: dec,
                standardized_threshold: None,
                threshold_increasing: None,
                passed: dec,
            }
        }
        TailModel::Gaussian { mean, sd } => {
            let mut exceedance = Vec::with_capacity(n_grid.len());
            let mut thresholds = Vec::with_capacity(n_grid.len());
            for (&n, &b) in n_grid.iter().zip(&bounds) {
                let mut sum = 0.0;
                let mut min_std = f64::INFINITY;
                for t in 1..=n {
                    let (mu, s) = (mean(t), sd(t));
                    sum += gaussian_exceedance(mu, s, b);
                    let z = if s > 0.0 { (b - mu.abs()) / s } else { f64::INFINITY };
                    min_std = min_std.min(z);
                }
                exceedance.push(sum);
                thresholds.push(min_std);
            }
            let dec = decreasing_or_zero(&exceedance);
            let inc = thresholds.windows(2).all(|w| w[1] > w[0] || w[1] == f64::INFINITY);
            TailReport {
                n_grid: n_grid.to_vec(),
                bounds,
                exceedance,
                exceedance_decreasing: dec,
                standardized_threshold: Some(thresholds),
                threshold_increasing: Some(inc),
                passed: dec && inc,
            }
        }
    }
}
