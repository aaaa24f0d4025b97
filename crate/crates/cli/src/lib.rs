//! Command-line front end for `deepmstm`: TOML run configurations and one
//! function per subcommand, each returning the exit code to use on failure.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{ForecastMode, Run, RunConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL};
