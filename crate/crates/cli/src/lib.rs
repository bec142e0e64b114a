//! Command-line front end: configuration, ingestion, run records and the
//! subcommand pipeline.

pub mod args;
pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod record;
pub mod reports;

pub use args::Cli;
pub use config::ToolConfig;
pub use error::CliError;
pub use pipeline::{run, Outcome};
pub use record::{load_run_record, write_run_record, RunRecord};
