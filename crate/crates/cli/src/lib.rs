//! Config-driven runner for the `gennum` solvers.
//!
//! A run reads a TOML config ([`config::RunConfig`]), evaluates it at the
//! chosen precision and produces a [`report::SolveReport`], which renders
//! as text, CSV (one row per iterate and ε) and JSON.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;
pub use report::{emit_csv, emit_report, SolveReport, Status};
pub use runner::run;
