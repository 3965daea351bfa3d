//! File formats and subcommands of the `cmseq` command-line tool.
//!
//! Laws and models are JSON documents with `schema_version` "1"; floats are
//! written with 17 significant digits so that files round-trip exactly.

pub mod commands;
pub mod error;
pub mod files;
pub mod json;

pub use error::{CliError, CliResult};
