//! Deep ReLU sieve estimators for dependent data.
//!
//! The crate builds sieve spaces of fully connected networks with
//! piecewise-linear activations, fits them by minimizing an empirical
//! criterion (least squares or logistic) on simulated mixing time series,
//! and checks the predicted `L2` convergence behaviour with a seeded Monte
//! Carlo harness.
//!
//! Modules:
//!
//! - [`network`]: architectures, flat parameter layout, forward and reverse passes.
//! - [`bounds`]: architecture scaling rules, rate exponents and complexity bounds.
//! - [`dgp`]: AR-ARCH and logistic autoregression simulators with condition checks.
//! - [`estimator`]: criteria, the sieve fitter and error metrics.
//! - [`diagnostics`]: block partitions, Rademacher estimates and truncation reports.
//! - [`harness`]: rate experiments, slope fits and report files.
//!
//! ```
//! use dnn_sieve::dgp::{ArArchConfig, DgpConfig};
//! use dnn_sieve::estimator::{fit_sieve, population_l2, Criterion, OptimizerSettings};
//! use dnn_sieve::ArchitectureSpec;
//!
//! let dgp = DgpConfig::ArArch(ArArchConfig::default_regression());
//! let sample = dgp.simulate(400, 1)?;
//! let arch = ArchitectureSpec::uniform(1, 2, 6, 2.0)?;
//! let opt = OptimizerSettings { max_iter: 200, ..OptimizerSettings::default() };
//! let fit = fit_sieve(&Criterion::LeastSquares, &arch, &sample, &opt, 1, 7)?;
//! let eval = dgp.simulate(5_000, 2)?;
//! assert!(population_l2(&fit.params, dgp.target(), &eval)? < 0.5);
//! # Ok::<(), dnn_sieve::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dgp;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod network;
pub mod sample;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use network::{ActivationSpec, ArchitectureSpec, NetworkParams};
pub use sample::TimeSeriesSample;
