//! Configuration and dispatch for the `cornerwalk` command-line tool.

pub mod config;
pub mod run;

pub use config::{parse_config, Cli, Command, RunConfig};
pub use run::{run, RunManifest};
