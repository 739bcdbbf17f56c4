use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dnn_sieve::bounds::{bounds_table, ScalingInput, Setting};
use dnn_sieve::dgp::{ArArchConfig, DgpConfig, LogisticAutoConfig};
use dnn_sieve::diagnostics::{block_norm, block_partition, truncation_report};
use dnn_sieve::estimator::{fit_sieve, Criterion, OptimizerSettings};
use dnn_sieve::harness::{emit_report, run_rate_experiment, ExperimentConfig};
use dnn_sieve::{ArchitectureSpec, Error, TimeSeriesSample};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "dnn-sieve", version, about = "Deep ReLU sieve estimation on simulated dependent data")]
struct Cli {
    /// JSON config for the chosen subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a sample path and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit the sieve estimator to a sample CSV.
    Fit(FitArgs),
    /// Run a Monte Carlo rate experiment.
    RateExperiment(RateArgs),
    /// Tabulate scaled architectures, rates and capacity bounds over a grid of n.
    Bounds(BoundsArgs),
    /// Truncation and block diagnostics for a sample CSV.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    ArArch,
    Logistic,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in generator, used when no config is given.
    #[arg(long, value_enum, default_value = "ar-arch")]
    model: Model,
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum CritArg {
    LeastSquares,
    Logistic,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    sample: PathBuf,
    #[arg(long, value_enum)]
    criterion: Option<CritArg>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// Sup-norm bound of the sieve; also the logistic scale.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct RateArgs {
    /// Use the built-in logistic experiment instead of the regression one when no config is given.
    #[arg(long)]
    logistic: bool,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value = "regression_stationary")]
    setting: Setting,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048,4096,8192")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    kappa_bar: f64,
    #[arg(long, default_value_t = 0.0)]
    upsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    c_l: f64,
    #[arg(long, default_value_t = 1.0)]
    c_h: f64,
    #[arg(long, default_value_t = 1.0)]
    c_b: f64,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    sample: PathBuf,
    /// Envelope `B_n`.
    #[arg(long)]
    bound: f64,
    #[arg(long, value_enum, default_value = "least-squares")]
    criterion: CritArg,
    /// Block length for the block-norm summary of `y`.
    #[arg(long)]
    block_length: Option<usize>,
}

/// Config document for `fit`; every field can be overridden by a flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct FitConfig {
    criterion: Criterion,
    depth: usize,
    width: usize,
    bound: f64,
    optimizer: OptimizerSettings,
    restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            criterion: Criterion::LeastSquares,
            depth: 2,
            width: 8,
            bound: 2.0,
            optimizer: OptimizerSettings::default(),
            restarts: 5,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_validation) || c.is::<serde_json::Error>());
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Validation("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let config = cli.config.as_deref().map(read_config).transpose()?;
    match cli.command {
        Command::Simulate(a) => simulate(a, config, cli.seed, &out),
        Command::Fit(a) => fit(a, config, cli.seed, &out),
        Command::RateExperiment(a) => rate(a, config, cli.seed, cli.threads, &out),
        Command::Bounds(a) => bounds(a, config, cli.out.as_deref()),
        Command::Diagnose(a) => diagnose(a, cli.out.as_deref()),
    }
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Validation(format!("{what} config: {e}")).into())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(a: SimulateArgs, config: Option<String>, seed: Option<u64>, out: &Path) -> Result<()> {
    let dgp = match config {
        Some(text) => parse::<DgpConfig>(&text, "generator")?,
        None => match a.model {
            Model::ArArch => DgpConfig::ArArch(ArArchConfig::default_regression()),
            Model::Logistic => DgpConfig::LogisticAuto(LogisticAutoConfig::default_logistic()),
        },
    };
    dgp.validate()?;
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let sample = dgp.simulate(a.n, seed)?;
    fs::create_dir_all(out)?;
    sample.write_csv_path(out.join("sample.csv"))?;
    write_json(
        &out.join("sample.json"),
        &serde_json::json!({ "config": dgp, "seed": seed, "n": a.n, "meta": sample.meta }),
    )?;
    println!("wrote {} observations to {}", sample.len(), out.join("sample.csv").display());
    Ok(())
}

fn fit(a: FitArgs, config: Option<String>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(text) => parse::<FitConfig>(&text, "fit")?,
        None => FitConfig::default(),
    };
    if let Some(b) = a.bound {
        cfg.bound = b;
    }
    match a.criterion {
        Some(CritArg::LeastSquares) => cfg.criterion = Criterion::LeastSquares,
        Some(CritArg::Logistic) => cfg.criterion = Criterion::logistic(cfg.bound)?,
        None => {}
    }
    cfg.depth = a.depth.unwrap_or(cfg.depth);
    cfg.width = a.width.unwrap_or(cfg.width);
    cfg.restarts = a.restarts.unwrap_or(cfg.restarts);
    if let Some(m) = a.max_iter {
        cfg.optimizer.max_iter = m;
    }
    let sample =
        TimeSeriesSample::read_csv_path(&a.sample).with_context(|| format!("reading sample {}", a.sample.display()))?;
    let arch = ArchitectureSpec::uniform(sample.dim(), cfg.depth, cfg.width, cfg.bound)?;
    let result = fit_sieve(&cfg.criterion, &arch, &sample, &cfg.optimizer, cfg.restarts, seed.unwrap_or(DEFAULT_SEED))?;
    fs::create_dir_all(out)?;
    write_json(&out.join("fit.json"), &result)?;
    println!(
        "criterion {:.6e}, theta_n {:.3e}, {} of {} restarts discarded",
        result.empirical_criterion, result.theta_n, result.trace.discarded, result.restarts_used
    );
    Ok(())
}

fn rate(a: RateArgs, config: Option<String>, seed: Option<u64>, threads: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(text) => parse::<ExperimentConfig>(&text, "experiment")?,
        None if a.logistic => ExperimentConfig::default_logistic(),
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    if let Some(g) = a.n_grid {
        cfg.n_grid = g;
    }
    cfg.validate()?;
    let report = run_rate_experiment(&cfg)?;
    emit_report(&report, out)?;
    write_json(&out.join("config.json"), &cfg)?;
    println!(
        "fitted slope {:.4} (se {:.4}); theoretical exponent {:.4}",
        report.fitted_slope, report.slope_se, report.theoretical_exponent
    );
    Ok(())
}

fn bounds(a: BoundsArgs, config: Option<String>, out: Option<&Path>) -> Result<()> {
    if a.n_grid.is_empty() {
        bail!(Error::Validation("n_grid is empty".into()));
    }
    let template = match config {
        Some(text) => parse::<ScalingInput>(&text, "scaling")?,
        None => ScalingInput {
            kappa_bar: a.kappa_bar,
            upsilon: a.upsilon,
            c_l: a.c_l,
            c_h: a.c_h,
            c_b: a.c_b,
            ..ScalingInput::new(a.n_grid[0], a.d, a.p)
        },
    };
    let rows = bounds_table(a.setting, &template, &a.n_grid)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_json(&dir.join("bounds.json"), &rows)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&rows)?),
    }
    Ok(())
}

fn diagnose(a: DiagnoseArgs, out: Option<&Path>) -> Result<()> {
    let sample =
        TimeSeriesSample::read_csv_path(&a.sample).with_context(|| format!("reading sample {}", a.sample.display()))?;
    if sample.is_empty() {
        bail!(Error::Precondition("sample is empty".into()));
    }
    let crit = match a.criterion {
        CritArg::LeastSquares => Criterion::LeastSquares,
        CritArg::Logistic => Criterion::logistic(a.bound)?,
    };
    let truncation = truncation_report(&sample, a.bound, &crit)?;
    let blocks = match a.block_length {
        Some(len) => {
            let part = block_partition(sample.len(), len)?;
            // block norms of the first covariate, which is the first lag for the built-in generators
            let norms = block_norm(&|x: &[f64]| x[0], &sample, &part)?;
            Some(serde_json::json!({ "a": part.a, "b": part.b, "remainder": part.tr.len(), "x1_norms": norms }))
        }
        None => None,
    };
    let report = serde_json::json!({ "n": sample.len(), "truncation": truncation, "blocks": blocks });
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_json(&dir.join("diagnose.json"), &report)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}
