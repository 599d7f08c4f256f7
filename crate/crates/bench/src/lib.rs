//! Experiment harness for `score-core`: JSON-configured replicated runs with
//! CSV output, parameter sweeps, the lower-bound ensemble and a suite of
//! brute-force oracle checks.

pub mod config;
pub mod runner;
pub mod stats;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, PolicySpec};
pub use runner::{run, run_replica, RunSummary};
