//! Benchmark dataset: JSONL schema, validation and the lifecycle operations
//! (splitting, curation, negatives, SFT export, statistics).

pub mod curate;
pub mod negatives;
pub mod sft;
pub mod split;
pub mod stats;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::text::{extract_span_text, Query, SpanSet, ToolObservation};

pub use curate::{curate, CurationReport, CurationThresholds, RejectReason};
pub use negatives::{build_negatives, NegativeBatch};
pub use sft::{export_sft, SftPair};
pub use split::{assign_splits, SplitRatios};
pub use stats::{dataset_stats, DatasetStats};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error("example {id}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("swe example {0} has no repo")]
    MissingRepo(String),
    #[error("invalid split ratios: {0}")]
    Ratios(String),
    #[error("need at least 2 positive examples to build negatives, found {0}")]
    TooFewPositives(usize),
    #[error("dataset is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Swe,
    SyntheticPos,
    SyntheticNeg,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Swe => "swe",
            Source::SyntheticPos => "synthetic_pos",
            Source::SyntheticNeg => "synthetic_neg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// On-disk row. Field order here is the canonical write order.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Row {
    id: String,
    source: Source,
    tool: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repo: Option<String>,
    query: String,
    tool_output: String,
    gold_spans: SpanSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// One validated benchmark example.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkExample {
    pub id: String,
    pub source: Source,
    pub tool: String,
    pub repo: Option<String>,
    pub query: Query,
    pub tool_output: String,
    pub gold_spans: SpanSet,
    pub split: Option<Split>,
    /// Fields outside the canonical schema, preserved on round trip.
    pub extra: Map<String, Value>,
    observation: ToolObservation,
}

impl BenchmarkExample {
    /// Builds and validates an example.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        source: Source,
        tool: impl Into<String>,
        repo: Option<String>,
        query: &str,
        tool_output: impl Into<String>,
        gold_spans: SpanSet,
        split: Option<Split>,
    ) -> Result<Self, DatasetError> {
        let id = id.into();
        let invalid = |reason: String| DatasetError::Invalid {
            id: id.clone(),
            reason,
        };
        if id.trim().is_empty() {
            return Err(invalid("empty id".into()));
        }
        let tool = tool.into();
        if tool.trim().is_empty() {
            return Err(invalid("empty tool".into()));
        }
        let query = Query::new(query).map_err(|e| invalid(e.to_string()))?;
        let tool_output = tool_output.into();
        let observation = ToolObservation::parse(&tool_output).map_err(|e| invalid(e.to_string()))?;
        gold_spans
            .check_range(observation.line_count())
            .map_err(|e| invalid(e.to_string()))?;
        if source == Source::SyntheticNeg && !gold_spans.is_empty() {
            return Err(invalid("synthetic_neg example has non-empty gold_spans".into()));
        }
        Ok(Self {
            id,
            source,
            tool,
            repo,
            query,
            tool_output,
            gold_spans,
            split,
            extra: Map::new(),
            observation,
        })
    }

    pub fn observation(&self) -> &ToolObservation {
        &self.observation
    }

    pub fn is_negative(&self) -> bool {
        self.gold_spans.is_empty()
    }

    pub fn gold_text(&self) -> String {
        extract_span_text(&self.observation, &self.gold_spans)
    }

    fn from_row(row: Row) -> Result<Self, DatasetError> {
        let mut example = Self::new(
            row.id,
            row.source,
            row.tool,
            row.repo,
            &row.query,
            row.tool_output,
            row.gold_spans,
            row.split,
        )?;
        example.extra = row.extra;
        Ok(example)
    }

    fn to_row(&self) -> Row {
        Row {
            id: self.id.clone(),
            source: self.source,
            tool: self.tool.clone(),
            repo: self.repo.clone(),
            query: self.query.as_str().to_string(),
            tool_output: self.tool_output.clone(),
            gold_spans: self.gold_spans.clone(),
            split: self.split,
            extra: self.extra.clone(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_row()).expect("rows always serialize")
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses JSONL content. Blank lines are skipped; ids must be unique.
pub fn parse_examples(content: &str) -> Result<Vec<BenchmarkExample>, DatasetError> {
    let rows: Vec<(usize, &str)> = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let examples = rows
        .par_iter()
        .map(|&(line, text)| {
            let row: Row = serde_json::from_str(text).map_err(|e| DatasetError::Row {
                line,
                reason: e.to_string(),
            })?;
            BenchmarkExample::from_row(row).map_err(|e| DatasetError::Row {
                line,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut seen = HashSet::new();
    for (example, (line, _)) in examples.iter().zip(&rows) {
        if !seen.insert(example.id.as_str()) {
            return Err(DatasetError::Row {
                line: *line,
                reason: format!("duplicate id {:?}", example.id),
            });
        }
    }
    Ok(examples)
}

pub fn read_examples(path: &Path) -> Result<Vec<BenchmarkExample>, DatasetError> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    parse_examples(&content)
}

pub fn render_examples(examples: &[BenchmarkExample]) -> String {
    let mut out = String::new();
    for example in examples {
        out.push_str(&example.to_json_line());
        out.push('\n');
    }
    out
}

pub fn write_examples(examples: &[BenchmarkExample], path: &Path) -> Result<(), DatasetError> {
    write_text(path, &render_examples(examples))
}

/// Writes `content` to a fresh file (truncating), creating parent directories.
pub fn write_text(path: &Path, content: &str) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(content.as_bytes()).map_err(io_err(path))
}

/// Renames fields of foreign rows onto the canonical schema before parsing,
/// e.g. `[("output", "tool_output")]`.
pub fn import_with_aliases(content: &str, aliases: &[(String, String)]) -> Result<Vec<BenchmarkExample>, DatasetError> {
    let mut canonical = String::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Map<String, Value> = serde_json::from_str(line).map_err(|e| DatasetError::Row {
            line: i + 1,
            reason: e.to_string(),
        })?;
        for (from, to) in aliases {
            if let Some(v) = value.remove(from) {
                value.insert(to.clone(), v);
            }
        }
        canonical.push_str(&Value::Object(value).to_string());
        canonical.push('\n');
    }
    parse_examples(&canonical)
}
