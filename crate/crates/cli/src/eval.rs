use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toolprune_core::dataset::parse_examples;
use toolprune_core::eval::{evaluate, System};
use toolprune_core::metrics::AggregateReport;
use toolprune_core::pruners::{HeuristicPruner, LlmPruner, Method, Pruner, PrunerConfig};
use toolprune_core::{Split, VERSION};

use crate::common::{emit, ensure_new_output, read_text, PrunerArgs};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Benchmark JSONL.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Only score this split (train, dev or test).
    #[arg(long)]
    pub split: Option<Split>,
    /// Metrics JSON destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-example JSONL destination.
    #[arg(long)]
    pub per_example_out: Option<PathBuf>,
    /// Scoring threads; for the llm method this bounds in-flight requests.
    #[arg(long)]
    pub workers: Option<usize>,
    /// System label in the report (defaults to the method name).
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub pruner: PrunerArgs,
}

/// Everything needed to reproduce a run. Worker count is deliberately absent:
/// it never changes results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub system: String,
    pub config: ManifestConfig,
    pub dataset: DatasetRef,
    pub split: Option<String>,
    pub seed: u64,
    /// Unix seconds; taken from SOURCE_DATE_EPOCH when set.
    pub timestamp: u64,
    pub toolkit_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestConfig {
    pub method: String,
    pub keep_fraction: f64,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub path: String,
    pub sha256: String,
}

/// The metrics JSON written by `eval` and read by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFile {
    pub manifest: RunManifest,
    pub report: AggregateReport,
}

fn timestamp() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return epoch;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&args.dataset];
    for out in [&args.out, &args.per_example_out].into_iter().flatten() {
        ensure_new_output(out, &inputs)?;
        inputs.push(out);
    }
    let content = read_text(&args.dataset)?;
    let mut examples = parse_examples(&content).with_context(|| format!("invalid dataset {}", args.dataset.display()))?;
    if let Some(split) = args.split {
        examples.retain(|e| e.split == Some(split));
        if examples.is_empty() {
            bail!("split {split} has no examples in {}", args.dataset.display());
        }
    }

    let method = args.pruner.method.method();
    let cfg = args.pruner.config(method.unwrap_or(Method::Bm25))?;
    let pruner: Option<Box<dyn Pruner>> = match method {
        None => None,
        Some(Method::Llm) => Some(Box::new(LlmPruner::new(args.pruner.endpoint.client()?, "llm"))),
        Some(_) => Some(Box::new(HeuristicPruner::new(cfg.clone())?)),
    };
    let system = match &pruner {
        Some(p) => System::Pruner(p.as_ref()),
        None => System::Oracle,
    };
    let label = args.label.clone().unwrap_or_else(|| system.label());
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));

    let mut output = evaluate(&system, &examples, workers)?;
    output.report.system = label.clone();
    if output.report.failures > 0 {
        log::warn!("{} examples failed and were scored as empty", output.report.failures);
    }

    let file = EvalFile {
        manifest: manifest(args, &label, &cfg, &content),
        report: output.report,
    };
    if let Some(path) = &args.per_example_out {
        let rows: Vec<String> = output
            .results
            .iter()
            .map(serde_json::to_string)
            .collect::<Result<_, _>>()?;
        emit(Some(path), &rows.join("\n"))?;
    }
    emit(args.out.as_ref(), &serde_json::to_string_pretty(&file)?)
}

fn manifest(args: &EvalArgs, label: &str, cfg: &PrunerConfig, content: &str) -> RunManifest {
    let is_llm = args.pruner.method.method() == Some(Method::Llm);
    RunManifest {
        command: "eval".into(),
        system: label.to_string(),
        config: ManifestConfig {
            method: format!("{:?}", args.pruner.method).to_lowercase(),
            keep_fraction: cfg.keep_fraction,
            bm25_k1: cfg.bm25_k1,
            bm25_b: cfg.bm25_b,
            endpoint: args.pruner.endpoint.endpoint.clone().filter(|_| is_llm),
            model: args.pruner.endpoint.model.clone().filter(|_| is_llm),
        },
        dataset: DatasetRef {
            path: args.dataset.display().to_string(),
            sha256: sha256_hex(content.as_bytes()),
        },
        split: args.split.map(|s| s.label().to_string()),
        seed: cfg.seed,
        timestamp: timestamp(),
        toolkit_version: VERSION.to_string(),
    }
}
