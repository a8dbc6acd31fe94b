//! Command-line front end: simulation runs, study analyses and the guided
//! `verify` workflow. The `replimeta` binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid config, input or
//! schema, 3 too many estimator failures in a simulation cell, 4 too few
//! studies for the requested analysis.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::meta::Tau2Estimator;
use crate::simlab::StudyKind;

mod commands;
mod config;
mod studies;
mod verify;

pub use commands::{cmd_analyze, cmd_simulate, AnalyzeKind};
pub use config::{RunConfig, Settings, DEFAULT_OUT};
pub use studies::{read_scores, Schema, StudiesFile, StudyRecord};
pub use verify::{cmd_verify, Finding, VerifyReport, WIDE_I2_CI_POINTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ESTIMATOR: i32 = 3;
pub const EXIT_TOO_FEW_STUDIES: i32 = 4;

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::EstimatorFailures { .. } | Error::Convergence(_) => EXIT_ESTIMATOR,
        Error::InsufficientData(_) => EXIT_TOO_FEW_STUDIES,
        Error::Domain(_)
        | Error::DegenerateVariance(_)
        | Error::SingularDesign(_)
        | Error::Input(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_INPUT,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForestFormat {
    Text,
    Svg,
}

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Options {
    /// JSON run configuration (unknown keys are rejected)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed for simulations
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for simulations (results do not depend on it)
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Between-study variance estimator: dl or reml
    #[arg(long, value_name = "dl|reml")]
    pub estimator: Option<Tau2Estimator>,
    /// Confidence level for intervals
    #[arg(long = "ci-level", value_name = "P")]
    pub ci_level: Option<f64>,
    /// Significance level
    #[arg(long, value_name = "P")]
    pub alpha: Option<f64>,
    /// Also write a forest plot
    #[arg(long, value_enum)]
    pub forest: Option<ForestFormat>,
    /// Categorical column defining subgroups
    #[arg(long, value_name = "COLUMN")]
    pub by: Option<String>,
    /// Moderator (the NAME of a moderator:NAME column) for meta-regression
    #[arg(long, value_name = "NAME")]
    pub moderator: Option<String>,
}

#[derive(Parser, Debug)]
#[command(name = "replimeta", version, about = "Replication variability simulations and random-effects meta-analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte Carlo study: power, effects, meta or chunks
    Simulate {
        kind: StudyKind,
        #[command(flatten)]
        options: Options,
    },
    /// Analyze one experiment or a set of studies
    Analyze {
        #[arg(value_enum)]
        kind: AnalyzeKind,
        input: PathBuf,
        #[command(flatten)]
        options: Options,
    },
    /// Walk through the verification guide for a set of replications
    Verify {
        input: PathBuf,
        #[command(flatten)]
        options: Options,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Results go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            } else {
                let _ = write!(stderr, "{e}");
                EXIT_INPUT
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate { kind, options } => {
            Settings::resolve(options).and_then(|s| cmd_simulate(*kind, &s, stdout).map(|_| ()))
        }
        Command::Analyze { kind, input, options } => {
            Settings::resolve(options).and_then(|s| cmd_analyze(*kind, input, &s, stdout))
        }
        Command::Verify { input, options } => {
            Settings::resolve(options).and_then(|s| cmd_verify(input, &s, stdout).map(|_| ()))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
