//! Two-stage teacher labeling: write a focused query for a raw observation,
//! then select the minimal supporting spans over its numbered rendering.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chat::{ChatClient, ChatError, ChatRequest};
use crate::dataset::{BenchmarkExample, Source};
use crate::output::{CLOSE_TAG, OPEN_TAG};
use crate::text::{extract_span_text, render_numbered, Query, Span, SpanSet, ToolObservation};

pub const TEMPLATE_VERSION: &str = "v1";
pub const QUERY_TEMPLATE: &str = include_str!("../assets/teacher_query_v1.txt");
pub const SPAN_TEMPLATE: &str = include_str!("../assets/teacher_spans_v1.txt");

pub const MAX_QUERY_CHARS: usize = 400;

/// A raw observation awaiting labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawObservation {
    pub tool: String,
    pub background_task: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherConfig {
    pub query_template: String,
    pub span_template: String,
    pub max_attempts: u32,
    /// Temperature for attempts after the first (the first is always 0).
    pub retry_temperature: f64,
    pub overly_broad_coverage: f64,
    pub max_parallel_requests: usize,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            query_template: QUERY_TEMPLATE.to_string(),
            span_template: SPAN_TEMPLATE.to_string(),
            max_attempts: 3,
            retry_temperature: 0.7,
            overly_broad_coverage: 0.6,
            max_parallel_requests: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("invalid teacher config: {0}")]
    Config(String),
    #[error("query synthesis failed after {attempts} attempts: {last}")]
    Query { attempts: u32, last: String },
    #[error("span selection failed after {attempts} attempts: {last}")]
    Spans { attempts: u32, last: String },
    #[error(transparent)]
    Chat(#[from] ChatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    Unsupported,
    OutOfRange,
    EmptyText,
    OverlyBroad,
}

impl DiscardReason {
    pub fn label(self) -> &'static str {
        match self {
            DiscardReason::Unsupported => "unsupported",
            DiscardReason::OutOfRange => "out_of_range",
            DiscardReason::EmptyText => "empty_text",
            DiscardReason::OverlyBroad => "overly_broad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Accept,
    Discard(DiscardReason),
}

impl TeacherConfig {
    pub fn validate(&self) -> Result<(), TeacherError> {
        if self.max_attempts < 1 {
            return Err(TeacherError::Config("max_attempts must be >= 1".into()));
        }
        if self.max_parallel_requests < 1 {
            return Err(TeacherError::Config("max_parallel_requests must be >= 1".into()));
        }
        Ok(())
    }

    fn temperature(&self, attempt: u32) -> f64 {
        if attempt == 0 {
            0.0
        } else {
            self.retry_temperature
        }
    }
}

/// Single-pass `{name}` substitution; substituted text is never rescanned.
pub fn fill_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let name = &after[..close];
            values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (*v, close))
        });
        match replaced {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Accepts a teacher query if it is one nonempty line, short, and free of the
/// prompt/answer tag grammar.
pub fn check_query(text: &str) -> Result<Query, String> {
    let trimmed = text.trim().trim_matches('"').trim();
    if trimmed.is_empty() {
        return Err("empty query".into());
    }
    if trimmed.chars().count() > MAX_QUERY_CHARS {
        return Err(format!("query longer than {MAX_QUERY_CHARS} characters"));
    }
    if trimmed.contains('\n') {
        return Err("query spans multiple lines".into());
    }
    for tag in [OPEN_TAG, CLOSE_TAG, "<query>", "</query>", "<tool_output>", "</tool_output>"] {
        if trimmed.contains(tag) {
            return Err(format!("query contains tag {tag}"));
        }
    }
    Query::new(trimmed).map_err(|e| e.to_string())
}

pub fn synthesize_query(raw: &RawObservation, cfg: &TeacherConfig, client: &dyn ChatClient) -> Result<Query, TeacherError> {
    let prompt = fill_template(
        &cfg.query_template,
        &[
            ("tool", &raw.tool),
            ("background_task", &raw.background_task),
            ("tool_output", &raw.raw_text),
        ],
    );
    let mut last = String::new();
    for attempt in 0..cfg.max_attempts {
        let reply = client.complete(&ChatRequest::single_user(prompt.clone(), cfg.temperature(attempt)))?;
        match check_query(&reply) {
            Ok(q) => return Ok(q),
            Err(reason) => {
                log::debug!("query attempt {} rejected: {reason}", attempt + 1);
                last = reason;
            }
        }
    }
    Err(TeacherError::Query {
        attempts: cfg.max_attempts,
        last,
    })
}

/// Parses a `[[start, end], ...]` answer, tolerating prose around the array.
pub fn parse_span_answer(reply: &str, line_count: usize) -> Result<SpanSet, String> {
    let start = reply.find('[').ok_or("no JSON array in answer")?;
    let end = reply.rfind(']').ok_or("no JSON array in answer")?;
    if end < start {
        return Err("no JSON array in answer".into());
    }
    let pairs: Vec<[usize; 2]> =
        serde_json::from_str(&reply[start..=end]).map_err(|e| format!("unparseable spans: {e}"))?;
    let spans = pairs
        .into_iter()
        .map(|[s, e]| Span::new(s, e))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    SpanSet::normalize(&spans, line_count).map_err(|e| e.to_string())
}

pub fn select_spans(
    query: &Query,
    tool: &str,
    obs: &ToolObservation,
    cfg: &TeacherConfig,
    client: &dyn ChatClient,
) -> Result<SpanSet, TeacherError> {
    let numbered = render_numbered(obs);
    let prompt = fill_template(
        &cfg.span_template,
        &[("query", query.as_str()), ("tool", tool), ("numbered_output", &numbered)],
    );
    let mut last = String::new();
    for attempt in 0..cfg.max_attempts {
        let reply = client.complete(&ChatRequest::single_user(prompt.clone(), cfg.temperature(attempt)))?;
        match parse_span_answer(&reply, obs.line_count()) {
            Ok(spans) => return Ok(spans),
            Err(reason) => {
                log::debug!("span attempt {} rejected: {reason}", attempt + 1);
                last = reason;
            }
        }
    }
    Err(TeacherError::Spans {
        attempts: cfg.max_attempts,
        last,
    })
}

/// Discards positives the observation cannot support.
pub fn validate_support(_query: &Query, obs: &ToolObservation, spans: &SpanSet, overly_broad_coverage: f64) -> Support {
    if spans.is_empty() {
        return Support::Discard(DiscardReason::Unsupported);
    }
    if spans.check_range(obs.line_count()).is_err() {
        return Support::Discard(DiscardReason::OutOfRange);
    }
    if extract_span_text(obs, spans).trim().is_empty() {
        return Support::Discard(DiscardReason::EmptyText);
    }
    let coverage = spans.covered_lines() as f64 / obs.line_count() as f64;
    if coverage > overly_broad_coverage {
        return Support::Discard(DiscardReason::OverlyBroad);
    }
    Support::Accept
}

/// Content-derived id: identical raw observations get identical ids.
pub fn content_id(raw: &RawObservation) -> String {
    let mut h = Sha256::new();
    for part in [&raw.tool, &raw.background_task, &raw.raw_text] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("lbl-{hex}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub counts: BTreeMap<String, usize>,
    pub skipped: Vec<SkippedItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedItem {
    pub id: String,
    pub reason: String,
    pub detail: String,
}

enum Outcome {
    Labeled(Box<BenchmarkExample>),
    Skipped(SkippedItem),
}

fn label_one(raw: &RawObservation, cfg: &TeacherConfig, client: &dyn ChatClient) -> Outcome {
    let id = content_id(raw);
    let skip = |reason: &str, detail: String| {
        Outcome::Skipped(SkippedItem {
            id: id.clone(),
            reason: reason.to_string(),
            detail,
        })
    };
    let obs = match ToolObservation::parse(&raw.raw_text) {
        Ok(o) => o,
        Err(e) => return skip("empty_observation", e.to_string()),
    };
    let reason_of = |e: &TeacherError| match e {
        TeacherError::Chat(_) => "transport",
        TeacherError::Query { .. } => "query_failed",
        TeacherError::Spans { .. } => "spans_failed",
        TeacherError::Config(_) => "config",
    };
    let query = match synthesize_query(raw, cfg, client) {
        Ok(q) => q,
        Err(e) => return skip(reason_of(&e), e.to_string()),
    };
    let spans = match select_spans(&query, &raw.tool, &obs, cfg, client) {
        Ok(s) => s,
        Err(e) => return skip(reason_of(&e), e.to_string()),
    };
    if let Support::Discard(reason) = validate_support(&query, &obs, &spans, cfg.overly_broad_coverage) {
        return skip(reason.label(), format!("spans {:?}", spans.to_pairs()));
    }
    let source = raw.source.unwrap_or(if raw.repo.is_some() { Source::Swe } else { Source::SyntheticPos });
    match BenchmarkExample::new(
        id.clone(),
        source,
        raw.tool.clone(),
        raw.repo.clone(),
        query.as_str(),
        raw.raw_text.clone(),
        spans,
        None,
    ) {
        Ok(ex) => Outcome::Labeled(Box::new(ex)),
        Err(e) => skip("invalid_example", e.to_string()),
    }
}

/// Labels every observation independently with bounded parallelism. Outputs
/// are sorted by id, so batch order never changes the result.
pub fn label_batch(
    raws: &[RawObservation],
    cfg: &TeacherConfig,
    client: &dyn ChatClient,
) -> Result<(Vec<BenchmarkExample>, SkipReport), TeacherError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_parallel_requests)
        .build()
        .map_err(|e| TeacherError::Config(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| raws.par_iter().map(|r| label_one(r, cfg, client)).collect());

    let mut examples = Vec::new();
    let mut report = SkipReport::default();
    for outcome in outcomes {
        match outcome {
            Outcome::Labeled(ex) => examples.push(*ex),
            Outcome::Skipped(item) => {
                *report.counts.entry(item.reason.clone()).or_default() += 1;
                report.skipped.push(item);
            }
        }
    }
    examples.sort_by(|a, b| a.id.cmp(&b.id));
    report.skipped.sort_by(|a, b| a.id.cmp(&b.id).then(a.reason.cmp(&b.reason)));
    Ok((examples, report))
}
