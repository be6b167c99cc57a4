//! Batch evaluation of a system over benchmark examples.
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BenchmarkExample;
use crate::metrics::{aggregate, score_example, AggregateReport, KeyedRow, MetricsError, MetricsRow};
use crate::output::Prediction;
use crate::pruners::{PruneInput, Pruner};

/// What produces predictions: a pruner, or the gold spans themselves.
pub enum System<'a> {
    Pruner(&'a dyn Pruner),
    Oracle,
}

impl System<'_> {
    pub fn label(&self) -> String {
        match self {
            System::Pruner(p) => p.label(),
            System::Oracle => "oracle".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no examples to evaluate")]
    Empty,
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One scored example as written to the per-example JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub id: String,
    pub tool: String,
    pub predicted_indices: Vec<usize>,
    pub unaligned_lines: usize,
    #[serde(flatten)]
    pub metrics: MetricsRow,
    /// Set when the system failed on this example; it was scored as empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub report: AggregateReport,
    /// Sorted by example id.
    pub results: Vec<ExampleResult>,
}

fn predict(system: &System<'_>, ex: &BenchmarkExample) -> (Prediction, Option<String>) {
    match system {
        System::Oracle => (Prediction::verbatim(ex.observation(), ex.gold_spans.to_lineset()), None),
        System::Pruner(p) => {
            let input = PruneInput {
                id: &ex.id,
                query: &ex.query,
                observation: ex.observation(),
            };
            match p.prune(input) {
                Ok(pred) => (pred, None),
                Err(e) => {
                    log::warn!("{}: {e}", ex.id);
                    (Prediction::empty(), Some(e.to_string()))
                }
            }
        }
    }
}

fn evaluate_one(system: &System<'_>, ex: &BenchmarkExample) -> Result<ExampleResult, MetricsError> {
    let (pred, error) = predict(system, ex);
    let metrics = score_example(&pred, &ex.gold_spans, ex.observation())?;
    Ok(ExampleResult {
        id: ex.id.clone(),
        tool: ex.tool.clone(),
        predicted_indices: pred.indices.iter().copied().collect(),
        unaligned_lines: pred.unaligned_line_count(),
        metrics,
        error,
    })
}

/// Scores every example on `workers` threads. Results are reduced in id
/// order, so the worker count never changes the output.
pub fn evaluate(system: &System<'_>, examples: &[BenchmarkExample], workers: usize) -> Result<EvalOutput, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::Empty);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let mut results = pool.install(|| {
        examples
            .par_iter()
            .map(|ex| evaluate_one(system, ex))
            .collect::<Result<Vec<_>, _>>()
    })?;
    results.sort_by(|a, b| a.id.cmp(&b.id));

    let keyed: Vec<KeyedRow> = results
        .iter()
        .map(|r| KeyedRow {
            id: r.id.clone(),
            tool: r.tool.clone(),
            metrics: r.metrics,
        })
        .collect();
    let mut report = aggregate(&system.label(), &keyed)?;
    report.failures = results.iter().filter(|r| r.error.is_some()).count();
    Ok(EvalOutput { report, results })
}
