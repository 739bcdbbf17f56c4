use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::target::HolderTarget;
use crate::error::{check_dim, Error, Result};
use crate::sample::{SampleMeta, TimeSeriesSample};
use crate::seed;
use crate::stats::norm_cdf;

/// Law of the exogenous covariates `V_t ∈ [0, 1]^{d-r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateProcess {
    IidUniform,
    /// Each coordinate is `Φ(Z_t)` with `Z_t = ρ Z_{t-1} + √(1-ρ²) e_t`.
    GaussianCopulaAr {
        rho: f64,
    },
}

/// How `Y_t` is drawn given `X_t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExogeneityMode {
    /// Covariate path drawn first; `Y_t = 1{ε_t < B f0(X_t)}` with iid
    /// standard logistic `ε_t`.
    Strict,
    /// `Y_t = 1{u_t > 1 - E[Y_t | X_t]}` with iid `u_t ~ U(0, 1)`.
    #[default]
    UniformNoise,
}

/// Logistic autoregression with `X_t = (V_{t-1}, Y_{t-1}, …, Y_{t-r})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticAutoConfig {
    /// Number of response lags `r`.
    pub lags: usize,
    /// Dimension of `V_t`, i.e. `d - r`.
    pub covariate_dim: usize,
    /// Logit scale `B ≥ 2`.
    pub bound: f64,
    /// Target on `[0, 1]^{d-r} × {0, 1}^r`.
    pub target: HolderTarget,
    pub covariates: CovariateProcess,
    #[serde(default)]
    pub mode: ExogeneityMode,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    1000
}

impl LogisticAutoConfig {
    /// One uniform covariate, one response lag, scaled-cosine target, `B = 2`.
    pub fn default_logistic() -> Self {
        LogisticAutoConfig {
            lags: 1,
            covariate_dim: 1,
            bound: 2.0,
            target: HolderTarget::scaled_cosine(2),
            covariates: CovariateProcess::IidUniform,
            mode: ExogeneityMode::UniformNoise,
            burn_in: default_burn_in(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.covariate_dim + self.lags
    }

    pub fn validate(&self) -> Result<()> {
        if self.covariate_dim == 0 {
            return Err(Error::validation("need at least one covariate (d > r)"));
        }
        if !(self.bound >= 2.0) || !self.bound.is_finite() {
            return Err(Error::validation(format!("logit scale B must be >= 2, got {}", self.bound)));
        }
        if self.target.dim != self.input_dim() {
            return Err(Error::validation(format!(
                "target dimension {} differs from d = {}",
                self.target.dim,
                self.input_dim()
            )));
        }
        self.target.validate()?;
        if !self.target.sup_abs().is_finite() {
            return Err(Error::validation("target must be bounded"));
        }
        if let CovariateProcess::GaussianCopulaAr { rho } = self.covariates {
            if !(rho.abs() < 1.0) {
                return Err(Error::validation(format!("need |rho| < 1, got {rho}")));
            }
        }
        Ok(())
    }
}

/// Numerically stable `e^z / (1 + e^z)`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `E[Y_t | X_t = x] = e^{B f0(x)} / (1 + e^{B f0(x)})`.
pub fn conditional_mean_logistic(cfg: &LogisticAutoConfig, x: &[f64]) -> Result<f64> {
    check_dim(cfg.input_dim(), x.len())?;
    Ok(logistic(cfg.bound * cfg.target.eval_unchecked(x)))
}

struct Covariates {
    process: CovariateProcess,
    latent: Vec<f64>,
}

impl Covariates {
    fn new<R: rand::Rng>(process: CovariateProcess, dim: usize, rng: &mut R) -> Self {
        let latent = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        Covariates { process, latent }
    }

    fn current(&self, out: &mut [f64], rng: &mut impl rand::Rng) {
        match self.process {
            CovariateProcess::IidUniform => out.iter_mut().for_each(|v| *v = rng.random::<f64>()),
            CovariateProcess::GaussianCopulaAr { .. } => {
                for (v, z) in out.iter_mut().zip(&self.latent) {
                    *v = norm_cdf(*z);
                }
            }
        }
    }

    fn advance(&mut self, rng: &mut impl rand::Rng) {
        if let CovariateProcess::GaussianCopulaAr { rho } = self.process {
            let s = (1.0 - rho * rho).sqrt();
            for z in &mut self.latent {
                let e: f64 = StandardNormal.sample(rng);
                *z = rho * *z + s * e;
            }
        }
    }
}

/// Simulates `burn_in + n` steps from zero initial response lags and returns
/// the last `n` observations, each row laid out as `(V_{t-1}, Y_{t-1}, …, Y_{t-r})`.
pub fn simulate_logistic_auto(cfg: &LogisticAutoConfig, n: usize, seed: u64) -> Result<TimeSeriesSample> {
    cfg.validate()?;
    let q = cfg.covariate_dim;
    let d = cfg.input_dim();
    let total = cfg.burn_in + n;

    let mut cov_rng = seed::rng(seed::derive(seed, &[0]));
    let mut noise_rng = seed::rng(seed::derive(seed, &[1]));
    let mut cov = Covariates::new(cfg.covariates, q, &mut cov_rng);

    // Strict exogeneity: the whole covariate path exists before any response.
    let path: Option<Vec<f64>> = match cfg.mode {
        ExogeneityMode::Strict => {
            let mut path = vec![0.0; total * q];
            for row in path.chunks_exact_mut(q) {
                cov.current(row, &mut cov_rng);
                cov.advance(&mut cov_rng);
            }
            Some(path)
        }
        ExogeneityMode::UniformNoise => None,
    };

    let mut state = vec![0.0; d];
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * d);
    for step in 0..total {
        match &path {
            Some(p) => state[..q].copy_from_slice(&p[step * q..(step + 1) * q]),
            None => {
                cov.current(&mut state[..q], &mut cov_rng);
                cov.advance(&mut cov_rng);
            }
        }
        let score = cfg.bound * cfg.target.eval_unchecked(&state);
        let yt = match cfg.mode {
            ExogeneityMode::Strict => {
                let u: f64 = noise_rng.random();
                let eps = (u / (1.0 - u)).ln();
                f64::from(u8::from(eps < score))
            }
            ExogeneityMode::UniformNoise => {
                let u: f64 = noise_rng.random();
                f64::from(u8::from(u > 1.0 - logistic(score)))
            }
        };
        if step >= cfg.burn_in {
            y.push(yt);
            x.extend_from_slice(&state);
        }
        if cfg.lags > 0 {
            state[q..].rotate_right(1);
            state[q] = yt;
        }
    }
    let meta = SampleMeta {
        generator: Some("logistic_auto".into()),
        target: Some(cfg.target.id().into()),
        contraction: match cfg.covariates {
            CovariateProcess::IidUniform => Some(0.0),
            CovariateProcess::GaussianCopulaAr { rho } => Some(rho.abs()),
        },
        seed: Some(seed),
    };
    Ok(TimeSeriesSample::new(d, y, x)?.with_meta(meta))
}
