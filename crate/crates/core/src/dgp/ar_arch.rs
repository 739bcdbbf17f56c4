use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::target::HolderTarget;
use crate::error::{Error, Result};
use crate::sample::{SampleMeta, TimeSeriesSample};
use crate::seed;
use crate::stats::mean_abs_std_normal;

/// Innovation law. Only standard normal innovations are supported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    #[default]
    StandardNormal,
}

/// Functional form of the scale function `η`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaForm {
    /// `η(x) = c0 + Σ c_j |x_j|`
    #[default]
    AbsLinear,
    /// `η(x) = √(c0 + Σ c_j x_j²)`, the classical ARCH volatility.
    SqrtQuadratic,
}

/// Scale function `η`, floored at `floor` when one is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSpec {
    #[serde(default)]
    pub form: EtaForm,
    pub c0: f64,
    pub coeffs: Vec<f64>,
    #[serde(default = "default_floor")]
    pub floor: Option<f64>,
}

fn default_floor() -> Option<f64> {
    Some(0.1)
}

impl EtaSpec {
    pub fn abs_linear(c0: f64, coeffs: Vec<f64>) -> Self {
        EtaSpec { form: EtaForm::AbsLinear, c0, coeffs, floor: default_floor() }
    }

    pub fn sqrt_quadratic(c0: f64, coeffs: Vec<f64>) -> Self {
        EtaSpec { form: EtaForm::SqrtQuadratic, c0, coeffs, floor: default_floor() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let raw = match self.form {
            EtaForm::AbsLinear => self.c0 + self.coeffs.iter().zip(x).map(|(c, v)| c * v.abs()).sum::<f64>(),
            EtaForm::SqrtQuadratic => (self.c0 + self.coeffs.iter().zip(x).map(|(c, v)| c * v * v).sum::<f64>()).sqrt(),
        };
        match self.floor {
            Some(f) => raw.max(f),
            None => raw,
        }
    }

    /// Coefficients `(c0, c_1..c_d)` of the linear envelope
    /// `η(x) ≤ c0 + Σ c_j |x_j|` (ignoring the floor on `c0`).
    pub fn envelope(&self) -> (f64, Vec<f64>) {
        match self.form {
            EtaForm::AbsLinear => (self.c0, self.coeffs.clone()),
            EtaForm::SqrtQuadratic => {
                (self.c0.max(0.0).sqrt(), self.coeffs.iter().map(|c| c.max(0.0).sqrt()).collect())
            }
        }
    }

    /// `inf_x η(x)` over all of `R^d`.
    pub fn infimum(&self) -> f64 {
        let raw = match self.form {
            EtaForm::AbsLinear => self.c0,
            EtaForm::SqrtQuadratic => self.c0.max(0.0).sqrt(),
        };
        match self.floor {
            Some(f) => raw.max(f),
            None => raw,
        }
    }
}

/// Nonlinear AR(d)-ARCH(d) model `Y_t = f0(X_t) + η(X_t) υ_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArArchConfig {
    /// Number of lags `d`; `X_t = (Y_{t-1}, …, Y_{t-d})`.
    pub lags: usize,
    pub target: HolderTarget,
    pub eta: EtaSpec,
    #[serde(default)]
    pub innovation: Innovation,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Required slack in the contraction condition.
    #[serde(default)]
    pub contraction_margin: f64,
    /// Initial lags `(Y_0, …, Y_{1-d})`; zeros when empty.
    #[serde(default)]
    pub initial: Vec<f64>,
}

fn default_burn_in() -> usize {
    1000
}

impl ArArchConfig {
    /// `Y_t = sin(Y_{t-1}) + (0.5 + 0.2 |Y_{t-1}|) υ_t`.
    pub fn default_regression() -> Self {
        ArArchConfig {
            lags: 1,
            target: HolderTarget::product_sine(1),
            eta: EtaSpec::abs_linear(0.5, vec![0.2]),
            innovation: Innovation::StandardNormal,
            burn_in: default_burn_in(),
            contraction_margin: 0.0,
            initial: Vec::new(),
        }
    }

    /// Sum `Σ_j (c_j^f + c_j^η E|υ|)` with `c_j^f = 0` for bounded targets.
    pub fn contraction(&self) -> f64 {
        let (_, coeffs) = self.eta.envelope();
        coeffs.iter().sum::<f64>() * mean_abs_std_normal()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`validate_ar_arch`]: conditions 1–4 for stationarity and
/// geometric β-mixing, plus structural checks (id 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn condition(&self, id: u8) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("condition {} ({}): {}", c.id, c.name, c.detail))
            .collect();
        Err(Error::validation(failed.join("; ")))
    }
}

pub fn validate_ar_arch(cfg: &ArArchConfig) -> ValidationReport {
    let mut checks = Vec::with_capacity(5);

    let structural = if cfg.lags == 0 {
        Err("need at least one lag".to_string())
    } else if cfg.target.dim != cfg.lags {
        Err(format!("target dimension {} differs from lag count {}", cfg.target.dim, cfg.lags))
    } else if cfg.eta.coeffs.len() != cfg.lags {
        Err(format!("eta has {} coefficients for {} lags", cfg.eta.coeffs.len(), cfg.lags))
    } else if !cfg.initial.is_empty() && cfg.initial.len() != cfg.lags {
        Err(format!("{} initial values for {} lags", cfg.initial.len(), cfg.lags))
    } else if let Err(e) = cfg.target.validate() {
        Err(e.to_string())
    } else {
        Ok(())
    };
    checks.push(ConditionCheck {
        id: 0,
        name: "structure".into(),
        passed: structural.is_ok(),
        detail: structural.err().unwrap_or_else(|| "ok".into()),
    });

    checks.push(ConditionCheck {
        id: 1,
        name: "innovation density".into(),
        passed: cfg.innovation == Innovation::StandardNormal,
        detail: "iid standard normal: strictly positive continuous density, mean zero".into(),
    });

    let sup = cfg.target.sup_abs();
    checks.push(ConditionCheck {
        id: 2,
        name: "bounded target".into(),
        passed: sup.is_finite(),
        detail: format!("sup |f0| = {sup}"),
    });

    let eta_ok = cfg.eta.c0 >= 0.0
        && cfg.eta.c0.is_finite()
        && cfg.eta.coeffs.iter().all(|c| *c >= 0.0 && c.is_finite())
        && cfg.eta.floor.map_or(true, |f| f.is_finite());
    let inf = cfg.eta.infimum();
    checks.push(ConditionCheck {
        id: 3,
        name: "scale bounds".into(),
        passed: eta_ok && inf > 0.0,
        detail: if eta_ok {
            format!("inf eta = {inf}, finite on compacts")
        } else {
            "eta coefficients must be finite and nonnegative".into()
        },
    });

    let rho = cfg.contraction();
    let limit = 1.0 - cfg.contraction_margin;
    checks.push(ConditionCheck {
        id: 4,
        name: "contraction".into(),
        passed: rho < limit,
        detail: format!("sum c_j^eta E|u| = {rho:.6} (limit {limit})"),
    });

    ValidationReport { checks }
}

/// Simulates `burn_in + n` steps from the configured initial lags and returns
/// the last `n` observations.
pub fn simulate_ar_arch(cfg: &ArArchConfig, n: usize, seed: u64) -> Result<TimeSeriesSample> {
    let initial = if cfg.initial.is_empty() { vec![0.0; cfg.lags] } else { cfg.initial.clone() };
    simulate_ar_arch_from(cfg, &initial, n, seed)
}

/// As [`simulate_ar_arch`] but with explicit initial lags `(Y_0, …, Y_{1-d})`.
pub fn simulate_ar_arch_from(cfg: &ArArchConfig, initial: &[f64], n: usize, seed: u64) -> Result<TimeSeriesSample> {
    validate_ar_arch(cfg).into_result()?;
    crate::error::check_dim(cfg.lags, initial.len())?;
    let d = cfg.lags;
    let mut rng = seed::rng(seed);
    let mut lags = initial.to_vec();
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * d);
    for step in 0..cfg.burn_in + n {
        let u: f64 = StandardNormal.sample(&mut rng);
        let yt = cfg.target.eval_unchecked(&lags) + cfg.eta.eval(&lags) * u;
        if step >= cfg.burn_in {
            y.push(yt);
            x.extend_from_slice(&lags);
        }
        lags.rotate_right(1);
        lags[0] = yt;
    }
    let meta = SampleMeta {
        generator: Some("ar_arch".into()),
        target: Some(cfg.target.id().into()),
        contraction: Some(cfg.contraction()),
        seed: Some(seed),
    };
    Ok(TimeSeriesSample::new(d, y, x)?.with_meta(meta))
}
