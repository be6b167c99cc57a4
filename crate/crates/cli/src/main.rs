//! `toolprune`: prune tool output from a pipe, evaluate pruners on a
//! benchmark, and manage benchmark datasets.
//!
//! Exit codes: 0 success (an empty prediction included), 2 usage or invalid
//! input, 3 chat endpoint failure.

mod common;
mod dataset_cmd;
mod eval;
mod prune;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "toolprune", version, about = "Query-conditioned pruning of tool output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Keep the lines of a tool output relevant to a query.
    Prune(prune::PruneArgs),
    /// Score a system on a benchmark file.
    Eval(eval::EvalArgs),
    /// Combine eval reports into a compression/recall CSV.
    Report(report::ReportArgs),
    /// Dataset lifecycle commands.
    #[command(subcommand)]
    Dataset(dataset_cmd::DatasetCmd),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prune(a) => prune::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Report(a) => report::run(a),
        Command::Dataset(c) => dataset_cmd::run(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(common::exit_code(&err) as u8)
        }
    }
}
