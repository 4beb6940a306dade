//! File formats, the environment registry and report rendering for the
//! `infoseq` command line.

pub mod commands;
pub mod envfile;
pub mod error;
pub mod format;
pub mod registry;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
