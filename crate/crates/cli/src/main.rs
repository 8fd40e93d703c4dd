//! `tensorhar`: train, evaluate, cross-validate, tune and federate activity
//! classifiers from the command line.
//!
//! Exit status is 0 when every artifact was written. Any failure exits
//! nonzero and prints one JSON object `{"error": {"kind", "message"}}` on
//! stderr.

mod commands;
mod config;
mod data;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{EvaluateArgs, FedArgs, ReportArgs, SearchArgs, SynthArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "tensorhar", version, about = "Sensor-based human activity recognition toolkit")]
struct Cli {
    /// Log progress to stderr (or set RUST_LOG).
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model and evaluate it on the held-out split.
    Train(TrainArgs),
    /// Score a saved model document on the held-out split.
    Evaluate(EvaluateArgs),
    /// Stratified k-fold cross-validation, plus the test gap when a test split exists.
    Cv(TrainArgs),
    /// Grid or randomized hyperparameter search scored by k-fold CV.
    Search(SearchArgs),
    /// Simulate FedAvg over logistic-regression clients.
    Fed(FedArgs),
    /// Merge report.json / cv.json files into comparison tables.
    Report(ReportArgs),
    /// Write a clearly labeled synthetic dataset.
    SynthData(SynthArgs),
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    use tensorhar::Error as E;
    if e.downcast_ref::<config::ConfigError>().is_some() {
        return "config";
    }
    if let Some(err) = e.downcast_ref::<E>() {
        return match err {
            E::Parse { .. } | E::Header { .. } => "parse",
            E::UnsupportedVersion { .. } | E::UnknownFamily(_) | E::Document(_) => "model_document",
            E::Io { .. } => "io",
            E::InvalidParameter { .. } => "invalid_parameter",
            E::UnknownLabel(_) => "unknown_label",
            E::Partition(_) => "partition",
            _ => "data",
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    if e.downcast_ref::<serde_json::Error>().is_some() {
        return "json";
    }
    "error"
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();

    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Cv(a) => commands::cv(a),
        Command::Search(a) => commands::search(a),
        Command::Fed(a) => commands::fed(a),
        Command::Report(a) => commands::report(a),
        Command::SynthData(a) => commands::synth_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(error_kind(&e), format!("{e:#}"), 1),
    }
}
