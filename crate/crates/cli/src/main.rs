//! Command-line pipeline runner: synthetic data generation, ingestion,
//! cleaning, feature assembly, model training/tuning, evaluation, and
//! explanation, all driven by one JSON config and a master seed.

mod commands;
mod config;
mod errors;
mod matrix_csv;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ModelSelection, Period, PipelineConfig};
use crate::errors::{CliError, ErrorReport};

#[derive(Parser)]
#[command(
    name = "hivecast",
    version,
    about = "Daily beehive weight-variation forecasting pipeline"
)]
struct Cli {
    /// JSON pipeline config; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Period for explanations (overrides the config).
    #[arg(long, global = true, value_enum)]
    period: Option<Period>,
    /// Model families to operate on (overrides the config).
    #[arg(long, global = true, value_enum)]
    model: Option<ModelSelection>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hive/weather panel with a ground-truth manifest.
    Synth,
    /// Parse the raw CSVs and join gridded weather onto each hive.
    Ingest,
    /// Run the cleaning chain and write per-filter reports.
    Clean,
    /// Assemble the lagged supervised feature matrix.
    Featurize,
    /// Fit the selected models on the training split.
    Train,
    /// Random-search cross-validation for the tree ensembles.
    Tune,
    /// Score the trained models: splits x periods, per-hive distributions.
    Evaluate,
    /// Impurity, permutation, and Shapley explanations.
    Explain,
    /// Bundle manifests and results into one audit document.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(period) = cli.period {
        config.period = period;
    }
    if let Some(model) = cli.model {
        config.models = model;
    }

    let manifest = match cli.command {
        Command::Synth => commands::synth(&config),
        Command::Ingest => commands::ingest(&config),
        Command::Clean => commands::clean(&config),
        Command::Featurize => commands::featurize(&config),
        Command::Train => commands::train(&config),
        Command::Tune => commands::tune(&config),
        Command::Evaluate => commands::evaluate(&config),
        Command::Explain => commands::explain(&config),
        Command::Report => commands::report(&config),
    }?;
    println!(
        "{}: {} artifacts in {}",
        manifest.command,
        manifest.artifacts.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = ErrorReport::from_error(&err);
            eprintln!("{}", serde_json::to_string(&report).expect("serializable error"));
            ExitCode::FAILURE
        }
    }
}
