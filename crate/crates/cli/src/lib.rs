//! `mqh`: simulation, correlation estimation, tail exponents and decay exponents of
//! multivariate quadratic Hawkes models from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 runtime model failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mqhawkes::asymptotics::AsymptoticsError;
use mqhawkes::estimate::EstimateError;
use mqhawkes::manifest::ManifestError;
use mqhawkes::model::ModelError;
use mqhawkes::simulate::SimError;
use mqhawkes::tail::TailError;

pub mod commands;
pub mod config;
pub mod output;

use config::ConfigFile;

/// Invalid input detected by the front end itself.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Exit code of a failed run: 3 when the model itself failed, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<SimError>() {
            return match e {
                SimError::Exploded { .. } | SimError::TooManyEvents { .. } | SimError::StepSizeTooLarge { .. } => {
                    EXIT_RUNTIME
                }
                _ => EXIT_INVALID,
            };
        }
        if let Some(e) = cause.downcast_ref::<TailError>() {
            return match e {
                TailError::NotBracketed { .. } | TailError::DegenerateOperator { .. } => EXIT_RUNTIME,
                TailError::InvalidInput(_) => EXIT_INVALID,
            };
        }
        let invalid = cause.is::<InvalidInput>()
            || cause.is::<EstimateError>()
            || cause.is::<ModelError>()
            || cause.is::<AsymptoticsError>()
            || cause.is::<ManifestError>()
            || cause.is::<std::io::Error>();
        if invalid {
            return EXIT_INVALID;
        }
    }
    EXIT_INVALID
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "mqh", version, about = "Multivariate quadratic Hawkes toolkit")]
pub struct Cli {
    /// TOML file with one table per subcommand; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "MQH_THREADS", value_name = "N")]
    pub threads: Option<usize>,
    /// Standard output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an event stream from a TOML model specification.
    Simulate(commands::simulate::Flags),
    /// Estimate correlation functions and check Yule-Walker residuals.
    Estimate(commands::estimate::Flags),
    /// Solve for the stationary tail exponent of the trend features.
    Tail(commands::tail::Flags),
    /// Integrate the trend-feature diffusion and compare with the solved profile.
    Sde(commands::sde::Flags),
    /// Predict correlation decay exponents from kernel exponents.
    Exponents(commands::exponents::Flags),
    /// Report endogeneity, positivity and mean intensities of a specification.
    Endogeneity(commands::endogeneity::Flags),
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(InvalidInput("thread count must be positive".into()).into());
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file = ConfigFile::load(cli.config.as_deref())?;
    let format = cli.format;
    match cli.command {
        Command::Simulate(f) => commands::simulate::run(&file.resolve("simulate", &f)?, format),
        Command::Estimate(f) => commands::estimate::run(&file.resolve("estimate", &f)?, format),
        Command::Tail(f) => commands::tail::run(&file.resolve("tail", &f)?, format),
        Command::Sde(f) => commands::sde::run(&file.resolve("sde", &f)?, format),
        Command::Exponents(f) => commands::exponents::run(&file.resolve("exponents", &f)?, format),
        Command::Endogeneity(f) => commands::endogeneity::run(&file.resolve("endogeneity", &f)?, format),
    }
}

/// Parses the process arguments, runs and maps failures to exit codes.
pub fn main_with_args() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
