//! Command-line front end for `sepsim-core`: run configurations, instance
//! files, CSV/JSON output and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod instance;
pub mod output;
pub mod plot;

pub use error::{CliError, CliResult, Diagnostic};
