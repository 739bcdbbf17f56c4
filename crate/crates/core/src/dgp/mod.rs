//! Dependent data-generating processes.
//!
//! Two families are simulated:
//!
//! - nonlinear AR-ARCH location-scale models `Y_t = f0(X_t) + η(X_t) υ_t` with
//!   `X_t = (Y_{t-1}, …, Y_{t-d})` and standard normal innovations, together
//!   with a checker for the four sufficient conditions for strict
//!   stationarity and geometric β-mixing;
//! - logistic autoregressions with `X_t = (V_{t-1}, Y_{t-1}, …, Y_{t-r})` and
//!   `P(Y_t = 1 | X_t) = e^{B f0(X_t)} / (1 + e^{B f0(X_t)})`.
//!
//! Targets are Hölder-smooth functions with all derivatives bounded by one.

mod ar_arch;
mod logistic;
mod tail;
mod target;

pub use ar_arch::{
    simulate_ar_arch, simulate_ar_arch_from, validate_ar_arch, ArArchConfig, ConditionCheck, EtaForm, EtaSpec,
    Innovation, ValidationReport,
};
pub use logistic::{
    conditional_mean_logistic, logistic, simulate_logistic_auto, CovariateProcess, ExogeneityMode, LogisticAutoConfig,
};
pub use tail::{check_tail_condition, tail_moment_gaussian, Marginal, TailModel, TailReport};
pub use target::{true_l2_distance, HolderTarget, TargetKind};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sample::TimeSeriesSample;

/// Either simulator, tagged by `model` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DgpConfig {
    ArArch(ArArchConfig),
    LogisticAuto(LogisticAutoConfig),
}

impl DgpConfig {
    pub fn simulate(&self, n: usize, seed: u64) -> Result<TimeSeriesSample> {
        match self {
            DgpConfig::ArArch(c) => simulate_ar_arch(c, n, seed),
            DgpConfig::LogisticAuto(c) => simulate_logistic_auto(c, n, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DgpConfig::ArArch(c) => validate_ar_arch(c).into_result(),
            DgpConfig::LogisticAuto(c) => c.validate(),
        }
    }

    pub fn target(&self) -> &HolderTarget {
        match self {
            DgpConfig::ArArch(c) => &c.target,
            DgpConfig::LogisticAuto(c) => &c.target,
        }
    }

    /// Covariate dimension `d` of `X_t`.
    pub fn input_dim(&self) -> usize {
        match self {
            DgpConfig::ArArch(c) => c.lags,
            DgpConfig::LogisticAuto(c) => c.input_dim(),
        }
    }
}
