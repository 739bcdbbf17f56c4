//! Monte Carlo rate experiments: for each sample size on a grid, simulate,
//! fit the sieve estimator with the scaled architecture, record the errors,
//! and regress the log median error on `ln n`.

mod report;

pub use report::{emit_report, read_rows, slope_fit, GridPoint, RateReport, RateRow, SlopeFit};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{scale, ScalingInput, ScalingOutput, Setting};
use crate::dgp::{ArArchConfig, DgpConfig, LogisticAutoConfig};
use crate::diagnostics::truncation_report;
use crate::error::{Error, Result};
use crate::estimator::{empirical_l2, fit_sieve, population_l2, Criterion, OptimizerSettings};
use crate::network::ArchitectureSpec;
use crate::sample::TimeSeriesSample;
use crate::{seed, stats};

/// Constants of the architecture scaling rule. `d` comes from the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConstants {
    pub p: usize,
    pub kappa_bar: f64,
    pub upsilon: f64,
    pub c_l: f64,
    pub c_h: f64,
    /// Defaults to 2 so that `B_n = c_B n^κ̄` meets the sieve's `B ≥ 2`.
    pub c_b: f64,
}

impl Default for ScalingConstants {
    fn default() -> Self {
        ScalingConstants { p: 2, kappa_bar: 0.0, upsilon: 0.0, c_l: 1.0, c_h: 1.0, c_b: 2.0 }
    }
}

/// A rate experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub dgp: DgpConfig,
    pub scaling: ScalingConstants,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    /// Length of the evaluation path for the population error.
    pub eval_n: usize,
    pub optimizer: OptimizerSettings,
    pub restarts: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Record wall-clock time per cell. Off by default so outputs are byte-identical across runs.
    pub record_runtime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            setting: Setting::RegressionStationary,
            dgp: DgpConfig::ArArch(ArArchConfig::default_regression()),
            scaling: ScalingConstants::default(),
            n_grid: vec![256, 512, 1024, 2048, 4096, 8192],
            replications: 10,
            eval_n: 100_000,
            optimizer: OptimizerSettings::default(),
            restarts: 5,
            master_seed: 20_240_601,
            threads: None,
            record_runtime: false,
        }
    }
}

impl ExperimentConfig {
    /// The default logistic experiment: one uniform covariate and one lag of `y`.
    pub fn default_logistic() -> Self {
        ExperimentConfig {
            setting: Setting::Logistic,
            dgp: DgpConfig::LogisticAuto(LogisticAutoConfig::default_logistic()),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::validation(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 3 {
            return Err(Error::validation("n_grid needs at least three sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] < 2 {
            return Err(Error::validation("n_grid must be strictly ascending sizes >= 2"));
        }
        if self.replications == 0 || self.restarts == 0 || self.eval_n == 0 {
            return Err(Error::validation("replications, restarts and eval_n must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::validation("threads must be positive"));
        }
        self.optimizer.validate()?;
        self.dgp.validate()?;
        match (self.setting, &self.dgp) {
            (Setting::Logistic, DgpConfig::LogisticAuto(_)) => {}
            (Setting::Logistic, _) => {
                return Err(Error::validation("logistic setting needs a logistic_auto generator"))
            }
            (_, DgpConfig::LogisticAuto(_)) => {
                return Err(Error::validation("regression settings need an ar_arch generator"))
            }
            _ => {}
        }
        for &n in &self.n_grid {
            let arch = self.architecture(n)?;
            ArchitectureSpec::uniform(self.dgp.input_dim(), arch.depth, arch.width, arch.bound)?;
        }
        Ok(())
    }

    pub fn criterion(&self) -> Criterion {
        match &self.dgp {
            DgpConfig::LogisticAuto(c) => Criterion::Logistic { bound: c.bound },
            DgpConfig::ArArch(_) => Criterion::LeastSquares,
        }
    }

    /// Scaled architecture for sample size `n`.
    pub fn architecture(&self, n: usize) -> Result<ScalingOutput> {
        let s = &self.scaling;
        let input = ScalingInput {
            n,
            d: self.dgp.input_dim(),
            p: s.p,
            kappa_bar: s.kappa_bar,
            upsilon: s.upsilon,
            c_l: s.c_l,
            c_h: s.c_h,
            c_b: s.c_b,
        };
        scale(self.setting, &input)
    }
}

/// Outcome of one `(n, replication)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub empirical_l2: f64,
    pub population_l2: f64,
    pub theta_n: f64,
    pub discarded_restarts: usize,
    pub exceed_count: usize,
}

impl CellResult {
    /// A cell with a prescribed error and nothing else, for exercising the harness.
    pub fn synthetic(error: f64) -> Self {
        CellResult { empirical_l2: error, population_l2: error, theta_n: 0.0, discarded_restarts: 0, exceed_count: 0 }
    }
}

/// Seeds for a cell: `(simulation, fitting)`.
pub fn cell_seeds(master: u64, n: usize, replication: usize) -> (u64, u64) {
    (seed::derive(master, &[1, n as u64, replication as u64]), seed::derive(master, &[2, n as u64, replication as u64]))
}

pub fn eval_seed(master: u64) -> u64 {
    seed::derive(master, &[3])
}

pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let eval = cfg.dgp.simulate(cfg.eval_n, eval_seed(cfg.master_seed))?;
    let crit = cfg.criterion();
    run_with_cells(cfg, |n, r| run_cell(cfg, &crit, &eval, n, r))
}

fn run_cell(
    cfg: &ExperimentConfig,
    crit: &Criterion,
    eval: &TimeSeriesSample,
    n: usize,
    replication: usize,
) -> Result<CellResult> {
    let scaled = cfg.architecture(n)?;
    let arch = ArchitectureSpec::uniform(cfg.dgp.input_dim(), scaled.depth, scaled.width, scaled.bound)?;
    let (sim_seed, fit_seed) = cell_seeds(cfg.master_seed, n, replication);
    let sample = cfg.dgp.simulate(n, sim_seed)?;
    let fit = fit_sieve(crit, &arch, &sample, &cfg.optimizer, cfg.restarts, fit_seed)?;
    let f0 = cfg.dgp.target();
    Ok(CellResult {
        empirical_l2: empirical_l2(&fit.params, f0, &sample)?,
        population_l2: population_l2(&fit.params, f0, eval)?,
        theta_n: fit.theta_n,
        discarded_restarts: fit.trace.discarded,
        exceed_count: truncation_report(&sample, scaled.bound, crit)?.exceed_count,
    })
}

/// Runs the grid with a caller-supplied cell function in place of
/// simulate-and-fit. Cells run on a bounded pool and are gathered in
/// `(n, replication)` order; the first failing cell in that order is reported.
pub fn run_with_cells<F>(cfg: &ExperimentConfig, cell: F) -> Result<RateReport>
where
    F: Fn(usize, usize) -> Result<CellResult> + Sync,
{
    let cells: Vec<(usize, usize)> =
        cfg.n_grid.iter().flat_map(|&n| (0..cfg.replications).map(move |r| (n, r))).collect();
    let work = || -> Vec<(Result<CellResult>, Option<f64>)> {
        cells
            .par_iter()
            .map(|&(n, r)| {
                let start = Instant::now();
                let out = cell(n, r);
                (out, cfg.record_runtime.then(|| start.elapsed().as_secs_f64()))
            })
            .collect()
    };
    let outcomes = match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut rows = Vec::with_capacity(cells.len());
    let mut results = Vec::with_capacity(cells.len());
    for (&(n, replication), (out, runtime_s)) in cells.iter().zip(outcomes) {
        let res = out.map_err(|e| Error::Experiment { n, replication, source: Box::new(e) })?;
        rows.push(RateRow {
            n,
            replication,
            empirical_l2: res.empirical_l2,
            population_l2: res.population_l2,
            theta_n: res.theta_n,
            runtime_s,
        });
        results.push(res);
    }

    let mut grid = Vec::with_capacity(cfg.n_grid.len());
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let block = &results[i * cfg.replications..(i + 1) * cfg.replications];
        let col = |f: fn(&CellResult) -> f64| stats::median(&block.iter().map(f).collect::<Vec<_>>());
        let scaled = cfg.architecture(n)?;
        grid.push(GridPoint {
            n,
            depth: scaled.depth,
            width: scaled.width,
            param_count: scaled.param_count,
            bound: scaled.bound,
            rate_value: scaled.rate_value,
            median_population_l2: col(|c| c.population_l2),
            median_empirical_l2: col(|c| c.empirical_l2),
            median_theta_n: col(|c| c.theta_n),
            max_theta_n: block.iter().map(|c| c.theta_n).fold(0.0, f64::max),
            discarded_restarts: block.iter().map(|c| c.discarded_restarts).sum(),
            exceed_count: block.iter().map(|c| c.exceed_count).sum(),
        });
    }
    let points: Vec<(f64, f64)> = grid.iter().map(|g| (g.n as f64, g.median_population_l2)).collect();
    let fit = slope_fit(&points)?;
    Ok(RateReport {
        setting: cfg.setting,
        theoretical_exponent: cfg.architecture(cfg.n_grid[0])?.rate_exponent,
        fitted_slope: fit.slope,
        intercept: fit.intercept,
        slope_se: fit.se,
        grid,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { n_grid: vec![100, 200, 400, 800], replications: 3, ..Default::default() }
    }

    #[test]
    fn injected_power_law() {
        let cfg = small();
        let rep = run_with_cells(&cfg, |n, _| Ok(CellResult::synthetic((n as f64).powf(-0.3)))).unwrap();
        assert!((rep.fitted_slope + 0.3).abs() < 1e-12);
        assert_eq!(rep.rows.len(), 12);
        assert!((rep.theoretical_exponent + 1.0 / 3.0).abs() < 1e-15);
        let flat = run_with_cells(&cfg, |_, _| Ok(CellResult::synthetic(0.7))).unwrap();
        assert!(flat.fitted_slope.abs() < 1e-12);
    }

    #[test]
    fn rows_are_in_grid_order() {
        let cfg = ExperimentConfig { threads: Some(2), ..small() };
        let rep = run_with_cells(&cfg, |n, r| Ok(CellResult::synthetic(1.0 / (n + r) as f64))).unwrap();
        let order: Vec<(usize, usize)> = rep.rows.iter().map(|r| (r.n, r.replication)).collect();
        let expect: Vec<(usize, usize)> =
            [100, 200, 400, 800].iter().flat_map(|&n| (0..3).map(move |r| (n, r))).collect();
        assert_eq!(order, expect);
        assert!(rep.rows.iter().all(|r| r.runtime_s.is_none()));
    }

    #[test]
    fn failing_cell_is_named() {
        let err = run_with_cells(&small(), |n, r| {
            if n == 400 && r == 1 {
                Err(Error::Optimization("boom".into()))
            } else {
                Ok(CellResult::synthetic(1.0))
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Experiment { n: 400, replication: 1, .. }), "{err}");
        assert!(!err.is_validation());
    }

    #[test]
    fn config_validation() {
        assert!(small().validate().is_ok());
        let bad_grid = ExperimentConfig { n_grid: vec![100, 50, 400], ..small() };
        assert!(bad_grid.validate().unwrap_err().is_validation());
        let short = ExperimentConfig { n_grid: vec![100, 200], ..small() };
        assert!(short.validate().is_err());
        let mismatched = ExperimentConfig { setting: Setting::Logistic, ..small() };
        assert!(mismatched.validate().is_err());
        let tiny_bound = ExperimentConfig { scaling: ScalingConstants { c_b: 1.0, ..Default::default() }, ..small() };
        assert!(tiny_bound.validate().unwrap_err().is_validation());
        assert!(ExperimentConfig::default_logistic().validate().is_ok());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::default_logistic();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let partial = ExperimentConfig::from_json(r#"{"n_grid": [64, 128, 256], "replications": 2}"#).unwrap();
        assert_eq!(partial.replications, 2);
        assert_eq!(partial.setting, Setting::RegressionStationary);
        assert!(ExperimentConfig::from_json(r#"{"n_grid": [1]}"#).is_err());
    }

    #[test]
    fn tiny_real_run_is_deterministic() {
        let cfg = ExperimentConfig {
            n_grid: vec![64, 96, 128],
            replications: 2,
            eval_n: 2000,
            restarts: 2,
            scaling: ScalingConstants { c_l: 0.25, c_h: 0.05, ..Default::default() },
            optimizer: OptimizerSettings { max_iter: 60, ..Default::default() },
            ..Default::default()
        };
        let a = run_rate_experiment(&cfg).unwrap();
        let b = run_rate_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.theta_n >= 0.0 && r.population_l2 > 0.0));
    }
}
