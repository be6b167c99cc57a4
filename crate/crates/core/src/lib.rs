//! Query-conditioned pruning of coding-agent tool output.
//!
//! Given a focused query and one raw tool observation, select the minimal
//! verbatim line spans that answer it; score predictions against gold spans;
//! and manage the benchmark dataset lifecycle.

pub mod chat;
pub mod dataset;
pub mod eval;
pub mod metrics;
pub mod output;
pub mod pruners;
pub mod teacher;
pub mod text;

pub use dataset::{BenchmarkExample, DatasetError, Source, Split};
pub use metrics::{fuzzy::fuzzy_similarity, score_example, AggregateReport, MetricsRow};
pub use output::{linearize_target, parse_model_output, Prediction};
pub use pruners::{HeuristicPruner, Method, PruneError, Pruner, PrunerConfig};
pub use text::{render_numbered, Query, Span, SpanSet, TextError, ToolObservation};

/// Toolkit version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
