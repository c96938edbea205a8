//! Command-line driver for the interference-channel coding lab.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 for
//! numeric failures (non-finite losses during training).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BaselineScheme, OutputDir};
use config::{PlotSpecFile, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments, files, or paths. Exit code 2.
    Config(String),
    /// Numeric failure during a run. Exit code 3.
    Numeric(String),
}

impl CliError {
    fn from_train(e: deepic::trainer::TrainError) -> Self {
        match e {
            deepic::trainer::TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    fn from_eval(e: deepic::evalbench::EvalError) -> Self {
        match e {
            deepic::evalbench::EvalError::Graph(g) => CliError::Numeric(g.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "deepic",
    version,
    about = "Train and evaluate codes for the two-user Gaussian interference channel"
)]
struct Cli {
    /// Verbose logging (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an autoencoder and write checkpoints, the training log, and
    /// a run manifest.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to the config, then $DEEPIC_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep a trained checkpoint over the configured channel grid.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, required_unless_present = "oracle")]
        checkpoint: Option<PathBuf>,
        /// Replace the model with a perfect-decision oracle (pipeline
        /// check; every BER column becomes zero).
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep one of the classic reference schemes.
    Baseline {
        #[arg(long, value_enum)]
        scheme: BaselineScheme,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Single-bit perturbation study of a trained encoder.
    Perturb {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Block length (defaults to the checkpoint's).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block-length generalization study.
    Blocklength {
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint for eval mode; train mode builds its own models.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render BER tables to an SVG figure.
    Plot {
        #[arg(long)]
        spec: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, out, seed } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let out = OutputDir::resolve(out.as_deref(), config.output_dir.as_deref())?;
            commands::cmd_train(&config, &out)
        }
        Command::Eval {
            config,
            checkpoint,
            oracle,
            out,
            seed,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let out = OutputDir::resolve(out.as_deref(), config.output_dir.as_deref())?;
            let ck = checkpoint.as_deref().unwrap_or(std::path::Path::new(""));
            commands::cmd_eval(&config, ck, oracle, &out)
        }
        Command::Baseline {
            scheme,
            config,
            out,
            seed,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let out = OutputDir::resolve(out.as_deref(), config.output_dir.as_deref())?;
            commands::cmd_baseline(&config, scheme, &out)
        }
        Command::Perturb {
            checkpoint,
            k,
            out,
        } => {
            let out = OutputDir::resolve(out.as_deref(), None)?;
            commands::cmd_perturb(&checkpoint, k, &out)
        }
        Command::Blocklength {
            config,
            checkpoint,
            out,
            seed,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let out = OutputDir::resolve(out.as_deref(), config.output_dir.as_deref())?;
            commands::cmd_blocklength(&config, checkpoint.as_deref(), &out)
        }
        Command::Plot { spec } => {
            let spec = PlotSpecFile::load(&spec)?;
            commands::cmd_plot(&spec)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
