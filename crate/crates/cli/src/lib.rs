//! Command-line pipeline: pool generation, dataset construction, training,
//! evaluation and report merging.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use commands::{run, Cli};
pub use config::RunConfig;
pub use error::{Category, CliError, CliResult};
