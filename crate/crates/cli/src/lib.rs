//! Command-line pipelines over `qvision-core`: configuration, recipes and
//! the `qvision` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod recipes;

pub use commands::{run, Cli};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
