//! Command-line front end: `fit`, `generate` and `export-dot`.

pub mod commands;
pub mod document;
pub mod dot;
pub mod error;

pub use commands::{Cli, Command};
pub use document::ResultDocument;
pub use error::CliError;
