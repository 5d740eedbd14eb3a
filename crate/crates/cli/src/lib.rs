//! Configuration, dispatch and output for the `qswitch` command.

pub mod config;
pub mod emit;
mod error;
pub mod run;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use run::{execute, run, Command, Outcome};
