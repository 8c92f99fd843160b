//! Command-line front-end for `cfdim`.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{parse_config_invocation, parse_invocation, CommandName, RunConfig};
pub use error::CliError;

/// Parses, runs and emits; returns the text for stdout, if any.
pub fn execute(argv: &[String]) -> Result<Option<String>, CliError> {
    let cfg = parse_invocation(argv)?;
    let report = commands::run(&cfg)?;
    report::emit(&cfg, &report)
}
