//! Configuration, CSV output and the study commands behind the
//! `compact-scheme` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, Sink};
pub use config::{Command, RawConfig, RunConfig};
pub use error::{CliError, Result};
