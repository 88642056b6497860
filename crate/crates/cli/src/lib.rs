//! Command-line front end: argument parsing, configuration layering and the
//! subcommand implementations behind the `bscope` binary.

pub mod cli;
pub mod commands;
pub mod config;

pub use cli::Cli;
pub use commands::{run, Failure};
pub use config::RunConfig;
