//! Monte Carlo experiment driver behind the `rotdoa` binary.

pub mod config;
pub mod experiments;
pub mod mse;
pub mod output;

pub use config::{ExperimentConfig, FieldError};
pub use experiments::ExperimentKind;
pub use mse::{run_mse, worker_pool, Method, MseRecord, MseStats};
pub use output::{write_outputs, Table};
