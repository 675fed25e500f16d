//! Command-line front end: `run <config>` and `compare <a> <b>`.

pub mod compare;
pub mod config;
pub mod report;
pub mod runner;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
pub use compare::{compare, Diff};
pub use config::{ExperimentConfig, Mode};
pub use report::{Report, Row};
pub use runner::{execute, RunOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OVER_TOLERANCE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rnmvar",
    version,
    about = "Number-variance experiments for random normal matrices"
)]
pub struct Cli {
    /// Worker threads.
    #[arg(long, global = true, env = "RNMVAR_JOBS")]
    pub jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs an experiment and writes `<name>.csv` and `<name>.json`.
    Run { config: PathBuf },
    /// Compares two reports (JSON sidecars or the CSVs next to them).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Largest tolerated relative difference.
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// Exit code for an error: 2 for bad input, 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Io(_)) {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

fn run_command(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let opts = RunOptions {
                seed: cli.seed,
                jobs: cli.jobs,
                out: cli.out.clone(),
            };
            let report = execute(&cfg, &opts)?;
            let (csv, json) = report.write(&report.config.output.dir, &report.config.output.name)?;
            println!("{}", csv.display());
            println!("{}", json.display());
            Ok(EXIT_OK)
        }
        Command::Compare { a, b, tol } => {
            let diff = compare(&Report::load(a)?, &Report::load(b)?, *tol)?;
            diff.write_csv(std::io::stdout().lock())?;
            Ok(if diff.exceeds() { EXIT_OVER_TOLERANCE } else { EXIT_OK })
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run_command(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
