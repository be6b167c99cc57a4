use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use toolprune_core::pruners::{HeuristicPruner, LlmPruner, Method, PruneInput, Pruner};
use toolprune_core::{Query, ToolObservation};

use crate::common::{read_input, PrunerArgs};

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// What to look for in the tool output.
    #[arg(long)]
    pub query: String,
    /// Read the observation from this file instead of stdin.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Prefix each kept line with its 1-based index ("n: ").
    #[arg(long)]
    pub numbered: bool,
    #[command(flatten)]
    pub pruner: PrunerArgs,
}

pub fn run(args: &PruneArgs) -> Result<()> {
    let Some(method) = args.pruner.method.method() else {
        bail!("--method oracle needs gold spans; use it with `eval`");
    };
    let query = Query::new(&args.query).context("--query")?;
    let bytes = read_input(args.file.as_deref())?;
    let obs = ToolObservation::from_bytes(&bytes).context("no tool output to prune")?;

    let pruner: Box<dyn Pruner> = if method == Method::Llm {
        Box::new(LlmPruner::new(args.pruner.endpoint.client()?, "llm"))
    } else {
        Box::new(HeuristicPruner::new(args.pruner.config(method)?)?)
    };
    let pred = pruner
        .prune(PruneInput {
            id: "stdin",
            query: &query,
            observation: &obs,
        })
        .context("pruning failed")?;

    let mut out = io::stdout().lock();
    for &i in &pred.indices {
        let line = obs.line(i).unwrap_or_default();
        if args.numbered {
            writeln!(out, "{i}: {line}")?;
        } else {
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}
