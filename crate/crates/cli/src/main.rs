//! `realstab`: file-driven realization-stability analysis.
//!
//! Exit codes: 0 stable / success, 1 non-stable samples or failed
//! agreement, 2 marginal, 3 unstable or improper, 4 no stability matrix,
//! 5 singular perturbed loop, 6 pole on the frequency grid, 7 gains not
//! stabilizing, 64 usage or parse error, 65 dimension or data error,
//! 66 missing input or parameterization blocks.

mod commands;
mod report;
mod schema;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use realstab::error::Error;
use realstab::ratfun::StabilityStatus;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError::new(exit::USAGE, message)
    }

    pub fn dimension(message: impl Into<String>) -> Self {
        CliError::new(exit::DATA, message)
    }

    pub fn missing(message: impl Into<String>) -> Self {
        CliError::new(exit::NO_INPUT, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoStabilityMatrix => exit::NO_STABILITY_MATRIX,
            Error::SingularPerturbedLoop => exit::SINGULAR_LOOP,
            Error::PoleOnGrid { .. } => exit::POLE_ON_GRID,
            Error::NotStabilizing(_) => exit::NOT_STABILIZING,
            Error::ImproperBlock(_) => exit::UNSTABLE,
            Error::InvalidArgument(_) | Error::EmptyMask | Error::ZeroDenominator => exit::USAGE,
            _ => exit::DATA,
        };
        CliError::new(code, e.to_string())
    }
}

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILED: u8 = 1;
    pub const MARGINAL: u8 = 2;
    pub const UNSTABLE: u8 = 3;
    pub const NO_STABILITY_MATRIX: u8 = 4;
    pub const SINGULAR_LOOP: u8 = 5;
    pub const POLE_ON_GRID: u8 = 6;
    pub const NOT_STABILIZING: u8 = 7;
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
    pub const NO_INPUT: u8 = 66;
}

/// Exit code of a stability verdict.
pub fn verdict_code(status: StabilityStatus) -> u8 {
    match status {
        StabilityStatus::Stable => exit::OK,
        StabilityStatus::Marginal => exit::MARGINAL,
        StabilityStatus::Unstable | StabilityStatus::Improper => exit::UNSTABLE,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "realstab",
    version,
    about = "Realization-stability analysis and robust certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Output {
    /// Write the JSON report to this path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report instead of the human-readable summary.
    #[arg(long)]
    pub json: bool,
    /// Record elapsed wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MarginCondition {
    /// IOP small gain, `1 / ||U||`.
    Cor3,
    /// Output-feedback SLS small gain, `1 / ||Φ||`.
    Cor8,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SampleCondition {
    #[value(name = "lemma2-direct")]
    Lemma2Direct,
    Cor3,
    Cor7,
    Cor9,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Youla,
    Iop,
    SlsSf,
    SlsOf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Stability matrix of the realization.
    S,
    /// Plant transfer matrix.
    G,
    /// IOP block `U`.
    U,
    /// Output-feedback SLS responses `Φ`.
    Phi,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stability matrix, verdict and poles of a system.
    Analyze {
        system: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Stability of the system under an additive perturbation.
    Perturb {
        system: PathBuf,
        delta: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Small-gain robustness margin of a parameterization.
    Margin {
        system: PathBuf,
        #[arg(long, value_enum)]
        condition: MarginCondition,
        /// Construct the destabilizing perturbation at the margin.
        #[arg(long)]
        probe: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Monte-Carlo check of a robust condition over a norm ball.
    Sample {
        system: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        condition: SampleCondition,
        /// FIR order of sampled blocks.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Perturbed blocks as `row,col;row,col`; defaults per condition.
        #[arg(long)]
        mask: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Singular values on a uniform grid over `[0, π]`, as CSV.
    Freqresp {
        system: PathBuf,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Target::S)]
        target: Target,
    },
    /// Closed-form parameterization from stabilizing gains.
    Synthesize {
        system: PathBuf,
        #[arg(long, value_enum)]
        family: Family,
        /// Gains as JSON (`{"F": [["-1/2"]], ...}`) or `@path`; defaults
        /// to the gains stored in the system file.
        #[arg(long)]
        gains: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn configure_threads() {
    if let Some(n) = std::env::var("REALSTAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
