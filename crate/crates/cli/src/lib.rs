//! Command-line frontend for the bimodal cavity library.

pub mod commands;
pub mod config;
pub mod error;
pub mod freq;
pub mod output;

pub use commands::run;
pub use config::{Experiment, RunConfig};
pub use error::{exit, CliError};
pub use output::Summary;

/// Process exit code for a finished or failed command.
pub fn exit_code(result: &Result<Summary, CliError>) -> i32 {
    match result {
        Ok(s) if s.all_pass() => exit::OK,
        Ok(_) => exit::ASSERTION,
        Err(e) => e.exit_code(),
    }
}
