//! Experiment harness for the superdiffusion toolkit: JSON configs in,
//! `report.json` and CSV tables out.

pub mod config;
pub mod defaults;
pub mod error;
pub mod report;
pub mod reproduce;
pub mod run;

pub use config::{ExperimentConfig, Overrides};
pub use defaults::Defaults;
pub use error::{LabError, Result};
pub use report::{CheckOutcome, CheckRule, CheckSpec, Quantity, Report, Table};
pub use run::{exit_code, run_and_write, run_config_file, run_experiment};
pub use superdiff_core::stats::{growth_fit, GrowthEstimate};
