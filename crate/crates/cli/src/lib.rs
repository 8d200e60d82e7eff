//! Command implementations behind the `sscag` binary.

pub mod bench;
pub mod commands;
pub mod error;

pub use error::{CliError, ErrorKind, Result};
