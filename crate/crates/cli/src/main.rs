//! `iongate`: chain modes, pulse synthesis, scheme verification and GHZ
//! simulation from a JSON run configuration.
//!
//! Exit codes: 0 success, 2 physics error, 3 optimizer failure, 4 input error.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IONGATE_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] iongate::Error),
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_physics() => 2,
            CliError::Lib(e) if e.is_solver() => 3,
            _ => 4,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "iongate", version, about = "Segmented phase-modulated entangling gates for ion chains")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config and IONGATE_OUT_DIR.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normal modes and Lamb-Dicke parameters of the configured chain.
    Modes,
    /// Synthesize a pulse scheme for the configured chain.
    Synthesize {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Recompute residual displacements and couplings of a scheme file.
    Verify {
        #[arg(long)]
        scheme: PathBuf,
    },
    /// Simulate GHZ preparation with a scheme file.
    Simulate {
        #[arg(long)]
        scheme: PathBuf,
        /// Driven ions as a 0/1 string, e.g. 0111; overrides the config mask.
        #[arg(long)]
        mask: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.ok_or_else(|| CliError::Input("--config is required".into()))?;
    let mut cfg = config::RunConfig::load(&path)?;
    let out = output::OutputDir::resolve(cli.out, &cfg)?;
    match cli.command {
        Command::Modes => commands::modes(&cfg, &out),
        Command::Synthesize { seed, starts } => {
            if let Some(s) = seed {
                cfg.optimizer.seed = s;
            }
            if let Some(s) = starts {
                cfg.optimizer.starts = s;
            }
            commands::synthesize(&cfg, &out)
        }
        Command::Verify { scheme } => commands::verify(&cfg, &scheme, &out),
        Command::Simulate { scheme, mask } => {
            let mask = mask.map(|m| output::parse_mask(&m)).transpose()?;
            commands::simulate(&cfg, &scheme, mask, &out)
        }
    }
}
