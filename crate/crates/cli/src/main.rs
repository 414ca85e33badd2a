//! `loadcast` command line: every pipeline stage as a subcommand, plus full
//! runs and experiment matrices driven by a JSON config.

mod commands;
mod overrides;

use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use loadcast::error::PipelineError;

/// Error classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or config (exit 1).
    Validation(String),
    /// A stage failed while running (exit 2).
    Stage(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Stage(e.to_string())
        }
    }
}

impl Failure {
    /// Wraps a runtime error from a named stage.
    pub fn stage(stage: &str, e: impl std::fmt::Display) -> Self {
        Failure::Stage(format!("stage `{stage}` failed: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "loadcast", version, about = "Hour-ahead load forecasting with anomaly cleaning and asymmetric losses")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic input CSV and its holiday file.
    Synth(commands::SynthArgs),
    /// Read CSV inputs, fill gaps, fit the scaler and write season datasets.
    Ingest(commands::IngestArgs),
    /// Add seeded outliers to a season dataset.
    InjectOutliers(commands::InjectArgs),
    /// Run DBSCAN detection and week-back substitution on a season dataset.
    Detect(commands::DetectArgs),
    /// Prepare data from a config and train one model per season.
    Train(commands::TrainArgs),
    /// Score a checkpoint on the test year of a dataset.
    Evaluate(commands::EvaluateArgs),
    /// Run the Cartesian product of experiment axes and compare them.
    Matrix(commands::MatrixArgs),
    /// Run the whole pipeline for one config.
    Run(commands::RunArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::InjectOutliers(a) => commands::inject(a),
        Command::Detect(a) => commands::detect(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Matrix(a) => commands::matrix(a),
        Command::Run(a) => commands::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Stage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
