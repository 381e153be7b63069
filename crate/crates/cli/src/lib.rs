//! Sweeps, oracle checks and data export on top of `qnee-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod oracle;

pub use error::{CliError, CliResult};
