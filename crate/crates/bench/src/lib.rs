//! Benchmark harness for hierarchical partial reinitialisation.
//!
//! An [`config::ExperimentConfig`] names a problem, an instance (a file or
//! a generator), a reinitialisation schedule, a budget and a list of seeds.
//! [`experiment::run_experiment`] runs every seed and writes one trace CSV
//! per seed plus a JSON summary; [`aggregate::aggregate_runs`] turns a
//! directory of traces into median convergence curves;
//! [`validate::validate_suite`] runs the oracle cross-checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod generate;
pub mod trace;
pub mod validate;

pub use error::{BenchError, Result};
