//! `banditlab` command-line interface.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use anyhow::{Context as _, Result};
use banditlab::encoders::{EncoderConfig, EncoderKind};
use banditlab::harness::{self, Experiment, ExperimentConfig};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "banditlab",
    version,
    about = "Seeded contextual-bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Run a single seed instead of the config's seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of rounds per run.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the encoder kind (hash, table, remote).
    #[arg(long)]
    encoder: Option<EncoderKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment and write its outputs.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory (replaces output.directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a config, its reward model and its encoder without running.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the embedding of a text as a JSON array.
    Encode {
        #[arg(long)]
        text: String,
        /// Take encoder settings from this experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        encoder: Option<EncoderKind>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        salt: Option<u64>,
    },
    /// Re-render the comparison table from an output directory.
    Report { dir: PathBuf },
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = overrides.seed {
        config.override_seed(seed);
    }
    if let Some(trials) = overrides.trials {
        config.override_trials(trials);
    }
    if let Some(kind) = overrides.encoder {
        config.override_encoder(kind);
    }
    Ok(config)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config: path,
            overrides,
            output,
        } => {
            let mut config = load_config(&path, &overrides)?;
            if let Some(dir) = output {
                config.output.directory = std::path::absolute(dir)?;
            }
            let exp = Experiment::from_config(config, base_dir(&path))
                .with_context(|| format!("loading {}", path.display()))?;
            let results = exp.run_experiment()?;
            eprintln!(
                "{} runs written to {} (config {})",
                results.runs.len(),
                exp.config().output.directory.display(),
                results.config_hash
            );
            let comparison = exp.config().output.directory.join(harness::COMPARISON_FILE);
            if comparison.exists() {
                print!("{}", std::fs::read_to_string(comparison)?);
            }
        }
        Command::Validate {
            config: path,
            overrides,
        } => {
            let config = load_config(&path, &overrides)?;
            let exp = Experiment::from_config(config, base_dir(&path))
                .with_context(|| format!("validating {}", path.display()))?;
            println!(
                "ok: {} algorithm(s) x {} seed(s), {} trials, {} contexts x {} actions, config {}",
                exp.config().algorithms.len(),
                exp.config().seeds.len(),
                exp.config().trials,
                exp.model().num_contexts(),
                exp.model().num_actions(),
                exp.config_hash()
            );
        }
        Command::Encode {
            text,
            config,
            encoder,
            dim,
            salt,
        } => {
            let (mut enc_config, base) = match &config {
                Some(path) => (
                    ExperimentConfig::load(path)?.encoder,
                    base_dir(path).to_owned(),
                ),
                None => (EncoderConfig::default(), PathBuf::from(".")),
            };
            if let Some(kind) = encoder {
                enc_config.kind = kind;
            }
            if let Some(dim) = dim {
                enc_config.embedding_dim = dim;
            }
            if let Some(salt) = salt {
                enc_config.salt = salt;
            }
            let vector = enc_config.build(&base)?.encode_text(&text)?;
            println!("{}", serde_json::to_string(&vector)?);
        }
        Command::Report { dir } => {
            print!("{}", harness::report(&dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
