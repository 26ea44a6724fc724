//! Command layer behind the `fsocap` binary.

pub mod commands;
pub mod config;
pub mod units;
pub mod validate;

pub use commands::{cmd_curve, cmd_optimal, cmd_select, DetectorBank, OptimalReport, Selection};
pub use config::{load_config, Model, Overrides, RunConfig};
pub use validate::{cmd_validate, ValidateOptions, ValidateSummary};
