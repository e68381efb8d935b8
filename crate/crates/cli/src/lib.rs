//! Command-line front end for the chord-sequence pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use error::{CliError, Result};
