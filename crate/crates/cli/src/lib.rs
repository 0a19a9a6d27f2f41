//! The `pvt` command-line pipeline: synthetic data, training, prediction,
//! metrics, leverage diagnostics, sensitivity and plot data.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

use std::ffi::OsString;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

pub use commands::{execute, Cli};
pub use error::{CliError, CliResult};

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
