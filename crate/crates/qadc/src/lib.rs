//! Command-line front end for `qadc-core`: capacities, quantizer design,
//! PAM benchmarks, SNR sweeps and the reference tables, written as CSV or
//! JSON.
//!
//! Exit codes: 0 success, 1 usage error, 2 a solve did not converge, 3 a
//! reproduced table left its tolerance.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

use clap::Parser;

pub use cli::Cli;
pub use config::RunConfig;
pub use error::CliError;
pub use output::{Document, Row};

/// Parses `args`, runs the command and writes the document. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_USAGE } else { error::EXIT_OK };
        }
    };
    match RunConfig::from_cli(cli).and_then(|cfg| run_config(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_config(cfg: &RunConfig) -> Result<u8, CliError> {
    let outcome = run::execute(cfg)?;
    let text = match cfg.format {
        cli::Format::Csv => outcome.document.to_csv()?,
        cli::Format::Json => outcome.document.to_json()?,
    };
    outcome.document.emit(&text, cfg.out.as_deref())?;
    Ok(outcome.exit_code)
}
