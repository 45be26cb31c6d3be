//! `sphere-moments`: solve the linearized random-interface transmission
//! problem, compute moment fields, and run the validation studies.

mod commands;
mod config;

use clap::{Parser, Subcommand};

use commands::CommandError;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sphere-moments",
    version,
    about = "Statistical moments of transmission solutions under random spherical interface perturbations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the linearized problem for the configured perturbation and
    /// tabulate it at the evaluation points.
    ShapeDerivative {
        #[arg(long)]
        config: String,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the k-th moment problem and tabulate covariance values.
    Moments {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Linearization-rate or self-convergence study.
    Study {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// "linearization" or "convergence"; overrides the config file.
        #[arg(long)]
        kind: Option<String>,
        /// "mean", "covariance", "raw-second" or "central-second".
        #[arg(long)]
        quantity: Option<String>,
    },
    /// Run the fast numerical-invariant checks.
    Validate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    };
    std::process::exit(code);
}

fn load(path: &str, seed: Option<u64>) -> Result<RunConfig, CommandError> {
    let mut config = RunConfig::load(path).map_err(CommandError::Config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Write to the `--out` flag's path, falling back to the config file's
/// `output_path`, falling back to stdout.
fn emit(text: &str, flag: Option<String>, cfg: &RunConfig) -> Result<(), CommandError> {
    match flag.or_else(|| cfg.output_path.clone()) {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CommandError::Config(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::ShapeDerivative { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let csv = commands::shape_derivative(&cfg)?;
            emit(&csv, out, &cfg)
        }
        Command::Moments { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let csv = commands::moments(&cfg)?;
            emit(&csv, out, &cfg)
        }
        Command::Study {
            config,
            out,
            seed,
            kind,
            quantity,
        } => {
            let mut cfg = load(&config, seed)?;
            if kind.is_some() {
                cfg.study_kind = kind;
            }
            if quantity.is_some() {
                cfg.study_quantity = quantity;
            }
            let csv = commands::study(&cfg)?;
            emit(&csv, out, &cfg)
        }
        Command::Validate { config, seed } => {
            let cfg = load(&config, seed)?;
            let text = commands::validate(&cfg)?;
            print!("{text}");
            Ok(())
        }
    }
}
