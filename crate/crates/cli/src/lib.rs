//! Orchestration for the `fermon` command line: run configs, sweeps with
//! checkpointing, result tables and the fit front end.

pub mod analysis;
pub mod config;
mod error;
pub mod manifest;
pub mod simulate;
pub mod table;

pub use config::{ModelConfig, ObservableSpec, RunConfig, SweepPoint};
pub use error::{CliError, Result};
pub use simulate::{simulate, RunSummary, SimulateOptions};
