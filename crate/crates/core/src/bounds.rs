//! Architecture scaling rules, rate exponents and closed-form complexity bounds.
//!
//! Asymptotic `≍` relations are instantiated with explicit constants
//! `c_L`, `c_H`, `c_B` (default 1) and rounded up to integers:
//!
//! | setting | `H_n` exponent | rate exponent | log power |
//! |---|---|---|---|
//! | regression, nonstationary α-mixing | `(d/(p+d/2))(1/4-κ̄)` | `-(p/(p+d/2))(1/4-κ̄)` | `2+υ` |
//! | regression, stationary β-mixing | `(d/(p+d))(1/2-κ̄-υ)` | `-(p/(p+d))(1/2-κ̄-υ)` | `6` |
//! | logistic | `(1/2)(d/(p+d))` | `-(1/2)(p/(p+d))` | `5` |
//!
//! with `L_n = ⌈c_L ln n⌉`, `H_n = ⌈c_H n^κ ln² n⌉` and `B_n = c_B n^κ̄`
//! (fixed at 2 in the logistic setting). Logs are natural except in the
//! sigmoid complexity term, which uses `log₂`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::uniform_param_count;
use crate::stats;

/// Which theorem's scaling rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    RegressionStationary,
    RegressionNonstationary,
    Logistic,
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "regression_stationary" => Ok(Setting::RegressionStationary),
            "regression_nonstationary" => Ok(Setting::RegressionNonstationary),
            "logistic" => Ok(Setting::Logistic),
            other => Err(Error::validation(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingInput {
    pub n: usize,
    pub d: usize,
    /// Hölder smoothness.
    pub p: usize,
    /// Growth exponent of the envelope bound `B_n ≍ n^κ̄`.
    #[serde(default)]
    pub kappa_bar: f64,
    /// Block exponent (stationary) or extra log power (nonstationary).
    #[serde(default)]
    pub upsilon: f64,
    #[serde(default = "one")]
    pub c_l: f64,
    #[serde(default = "one")]
    pub c_h: f64,
    #[serde(default = "one")]
    pub c_b: f64,
}

fn one() -> f64 {
    1.0
}

impl ScalingInput {
    pub fn new(n: usize, d: usize, p: usize) -> Self {
        ScalingInput { n, d, p, kappa_bar: 0.0, upsilon: 0.0, c_l: 1.0, c_h: 1.0, c_b: 1.0 }
    }

    pub fn with_n(self, n: usize) -> Self {
        ScalingInput { n, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::precondition("sample size must be at least 2"));
        }
        if self.d == 0 || self.p == 0 {
            return Err(Error::precondition("d and p must be positive"));
        }
        if !(self.upsilon >= 0.0) {
            return Err(Error::precondition("upsilon must be nonnegative"));
        }
        if !(self.kappa_bar >= 0.0) {
            return Err(Error::precondition("kappa_bar must be nonnegative"));
        }
        for (name, c) in [("c_l", self.c_l), ("c_h", self.c_h), ("c_b", self.c_b)] {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::precondition(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingOutput {
    /// `L_n`
    pub depth: usize,
    /// `H_n`
    pub width: usize,
    /// `B_n`
    pub bound: f64,
    /// `W_n` for the uniform-width architecture.
    pub param_count: usize,
    pub rate_exponent: f64,
    /// `ε_n` including log factors.
    pub rate_value: f64,
    /// Sup-norm projection bound `n^{-κ p / d}` implied by the width exponent.
    pub projection_bound: f64,
}

fn assemble(
    input: &ScalingInput,
    width_exponent: f64,
    rate_exponent: f64,
    log_power: f64,
    bound: f64,
) -> ScalingOutput {
    let n = input.n as f64;
    let ln = n.ln();
    let depth = ((input.c_l * ln).ceil() as usize).max(1);
    let width = ((input.c_h * n.powf(width_exponent) * ln * ln).ceil() as usize).max(1);
    let projection_bound = n.powf(-width_exponent * input.p as f64 / input.d as f64);
    ScalingOutput {
        depth,
        width,
        bound,
        param_count: uniform_param_count(input.d, depth, width),
        rate_exponent,
        rate_value: n.powf(rate_exponent) * ln.powf(log_power),
        projection_bound,
    }
}

/// Scaling for nonstationary α-mixing regression; requires `κ̄ < 1/4`.
pub fn scale_regression_nonstationary(input: &ScalingInput) -> Result<ScalingOutput> {
    input.validate()?;
    if input.kappa_bar >= 0.25 {
        return Err(Error::precondition(format!("kappa_bar must lie in [0, 1/4), got {}", input.kappa_bar)));
    }
    let (d, p) = (input.d as f64, input.p as f64);
    let slack = 0.25 - input.kappa_bar;
    Ok(assemble(
        input,
        d / (p + d / 2.0) * slack,
        -(p / (p + d / 2.0)) * slack,
        2.0 + input.upsilon,
        input.c_b * (input.n as f64).powf(input.kappa_bar),
    ))
}

/// Scaling for strictly stationary β-mixing regression; requires
/// `κ̄ < 1/2` and `υ < 1/2 - κ̄`. With `υ = 0` this is the unblocked rule.
pub fn scale_regression_stationary(input: &ScalingInput) -> Result<ScalingOutput> {
    input.validate()?;
    if input.kappa_bar >= 0.5 {
        return Err(Error::precondition(format!("kappa_bar must lie in [0, 1/2), got {}", input.kappa_bar)));
    }
    if input.upsilon >= 0.5 - input.kappa_bar {
        return Err(Error::precondition(format!(
            "upsilon must lie in [0, 1/2 - kappa_bar) = [0, {}), got {}",
            0.5 - input.kappa_bar,
            input.upsilon
        )));
    }
    let (d, p) = (input.d as f64, input.p as f64);
    let slack = 0.5 - input.kappa_bar - input.upsilon;
    Ok(assemble(
        input,
        d / (p + d) * slack,
        -(p / (p + d)) * slack,
        6.0,
        input.c_b * (input.n as f64).powf(input.kappa_bar),
    ))
}

/// Scaling for the logistic setting; the bound is fixed at 2 and `κ̄`, `υ`,
/// `c_B` are ignored.
pub fn scale_logistic(input: &ScalingInput) -> Result<ScalingOutput> {
    input.validate()?;
    let (d, p) = (input.d as f64, input.p as f64);
    Ok(assemble(input, 0.5 * d / (p + d), -0.5 * p / (p + d), 5.0, 2.0))
}

pub fn scale(setting: Setting, input: &ScalingInput) -> Result<ScalingOutput> {
    match setting {
        Setting::RegressionStationary => scale_regression_stationary(input),
        Setting::RegressionNonstationary => scale_regression_nonstationary(input),
        Setting::Logistic => scale_logistic(input),
    }
}

/// Guaranteed sup-norm projection error `n^{-κ p / d}` for an architecture
/// that meets the depth and width thresholds
/// `L ≥ ⌈C ln n⌉`, `min width ≥ ⌈C n^κ ln² n⌉`.
pub fn approximation_bound(
    n: usize,
    d: usize,
    p: usize,
    kappa: f64,
    depth: usize,
    min_width: usize,
    constant: f64,
) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::precondition(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    if n < 2 || d == 0 || p == 0 {
        return Err(Error::precondition("need n >= 2 and positive d, p"));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let need_depth = (constant * ln).ceil() as usize;
    let need_width = (constant * nf.powf(kappa) * ln * ln).ceil() as usize;
    if depth < need_depth {
        return Err(Error::ArchitectureTooSmall(format!("depth {depth} below required {need_depth}")));
    }
    if min_width < need_width {
        return Err(Error::ArchitectureTooSmall(format!("width {min_width} below required {need_width}")));
    }
    Ok(nf.powf(-kappa * p as f64 / d as f64))
}

/// Order bounds `(W L ln(W/L), W L ln W)` on the pseudo-dimension of a
/// ReLU network class, with unit constants.
pub fn pdim_order_bounds(w: usize, l: usize) -> Result<(f64, f64)> {
    pdim_order_bounds_with(w, l, 1.0, 1.0)
}

pub fn pdim_order_bounds_with(w: usize, l: usize, c_lower: f64, c_upper: f64) -> Result<(f64, f64)> {
    if l < 1 || w <= l {
        return Err(Error::precondition(format!("need W > L >= 1, got W = {w}, L = {l}")));
    }
    let (wf, lf) = (w as f64, l as f64);
    Ok((c_lower * wf * lf * (wf / lf).ln(), c_upper * wf * lf * wf.ln()))
}

/// Natural log of the covering bound `(2 e B a / (δ · Pdim))^{Pdim}`.
pub fn covering_bound(delta: f64, bound: f64, a: usize, pdim: usize) -> Result<f64> {
    if pdim < 1 || a < pdim {
        return Err(Error::precondition(format!("need a >= Pdim >= 1, got a = {a}, Pdim = {pdim}")));
    }
    if !(delta > 0.0 && delta <= 2.0 * bound) {
        return Err(Error::precondition(format!("need 0 < delta <= 2B, got delta = {delta}, B = {bound}")));
    }
    let k = pdim as f64;
    Ok(k * (2.0 * E * bound * a as f64 / (delta * k)).ln())
}

/// Activation families with a known complexity term `Ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class")]
pub enum ActivationClass {
    PiecewiseLinear,
    /// `degree` is the maximal piece degree, `pieces` the breakpoint count.
    PiecewisePolynomial {
        degree: u32,
        pieces: u32,
    },
    Sigmoid,
}

/// Complexity term `Ξ` bounding the pseudo-dimension of a feedforward class
/// with `W` parameters, `L` layers and `U` computation units.
pub fn ffn_complexity_xi(class: ActivationClass, w: usize, l: usize, u: usize) -> Result<f64> {
    if w == 0 || l == 0 || u == 0 {
        return Err(Error::precondition("W, L and U must be positive"));
    }
    let (wf, lf, uf) = (w as f64, l as f64, u as f64);
    match class {
        ActivationClass::PiecewiseLinear => Ok(wf * lf * wf.ln()),
        ActivationClass::PiecewisePolynomial { degree, pieces } => {
            if pieces == 0 {
                return Err(Error::precondition("piecewise-polynomial class needs at least one breakpoint"));
            }
            Ok(wf * uf * ((degree as f64 + 1.0) * pieces as f64).ln())
        }
        ActivationClass::Sigmoid => {
            let m = (wf + 2.0) * uf;
            Ok(m * m + m * (18.0 * (wf + 2.0) * uf * uf).log2())
        }
    }
}

/// Number of grid points for the Dudley bound's `α` minimization.
pub const DUDLEY_GRID: usize = 64;

/// Dudley entropy-integral bound
/// `inf_{0<α<D} 4α + 8 √(2/n) ∫_α^D √(log N(u)) du`,
/// minimized over a log-spaced grid on `[D·10⁻⁶, D]`. The grid minimum is an
/// upper envelope of the infimum.
pub fn dudley_bound<F: Fn(f64) -> f64>(cover_log_fn: F, radius: f64, n_eff: usize) -> f64 {
    if !(radius > 0.0) || n_eff == 0 {
        return 0.0;
    }
    let lo = radius * 1e-6;
    let ratio = (radius / lo).ln() / (DUDLEY_GRID - 1) as f64;
    let grid: Vec<f64> =
        (0..DUDLEY_GRID).map(|i| if i + 1 == DUDLEY_GRID { radius } else { lo * (ratio * i as f64).exp() }).collect();
    let integrand = |u: f64| cover_log_fn(u).max(0.0).sqrt();
    let scale = 8.0 * (2.0 / n_eff as f64).sqrt();
    let mut tail = 0.0;
    let mut best = 4.0 * radius;
    for i in (0..DUDLEY_GRID - 1).rev() {
        let (a, b) = (grid[i], grid[i + 1]);
        tail += stats::integrate(&integrand, a, b, 1e-10 * (b - a).max(1e-300));
        best = best.min(4.0 * a + scale * tail);
    }
    best
}

/// One row of the `bounds` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub param_count: usize,
    pub bound: f64,
    pub rate_value: f64,
    pub pdim_lower: f64,
    pub pdim_upper: f64,
}

pub fn bounds_table(setting: Setting, template: &ScalingInput, n_grid: &[usize]) -> Result<Vec<BoundsRow>> {
    n_grid
        .iter()
        .map(|&n| {
            let out = scale(setting, &template.with_n(n))?;
            let (pdim_lower, pdim_upper) = pdim_order_bounds(out.param_count, out.depth)?;
            Ok(BoundsRow {
                n,
                depth: out.depth,
                width: out.width,
                param_count: out.param_count,
                bound: out.bound,
                rate_value: out.rate_value,
                pdim_lower,
                pdim_upper,
            })
        })
        .collect()
}
