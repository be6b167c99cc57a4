//! Line and span algebra over raw tool output.
//!
//! An observation is decomposed into lines once at ingest. Everything else in
//! the crate (pruners, metrics, dataset tooling) addresses it through 1-based
//! inclusive line indices.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("empty observation")]
    EmptyObservation,
    #[error("empty query")]
    EmptyQuery,
    #[error("invalid span ({start}, {end}): start must be >= 1 and <= end")]
    InvalidSpan { start: usize, end: usize },
    #[error("span ({start}, {end}) out of range for observation with {line_count} lines")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        line_count: usize,
    },
    #[error("line index {index} out of range for observation with {line_count} lines")]
    IndexOutOfRange { index: usize, line_count: usize },
}

/// One raw tool output, split into lines.
///
/// `\r\n` is normalized to `\n` and a single trailing newline does not produce
/// an empty final line. Both facts are kept as flags so the normalized text can
/// be rebuilt exactly with [`ToolObservation::reconstruct`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolObservation {
    raw_text: String,
    lines: Vec<String>,
    trailing_newline: bool,
    crlf_normalized: bool,
}

impl ToolObservation {
    /// Splits `raw_text` into lines. Fails on empty input.
    pub fn parse(raw_text: &str) -> Result<Self, TextError> {
        if raw_text.is_empty() {
            return Err(TextError::EmptyObservation);
        }
        let crlf_normalized = raw_text.contains("\r\n");
        let normalized = if crlf_normalized {
            raw_text.replace("\r\n", "\n")
        } else {
            raw_text.to_string()
        };
        let (body, trailing_newline) = match normalized.strip_suffix('\n') {
            Some(body) => (body, true),
            None => (normalized.as_str(), false),
        };
        let lines = body.split('\n').map(str::to_string).collect();
        Ok(Self {
            raw_text: normalized.clone(),
            lines,
            trailing_newline,
            crlf_normalized,
        })
    }

    /// Lossy UTF-8 ingest: invalid sequences become U+FFFD.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TextError> {
        Self::parse(&String::from_utf8_lossy(bytes))
    }

    /// The normalized raw text (after `\r\n` folding).
    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// 1-based line access.
    pub fn line(&self, index: usize) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.lines.get(i))
            .map(String::as_str)
    }

    pub fn has_trailing_newline(&self) -> bool {
        self.trailing_newline
    }

    pub fn was_crlf(&self) -> bool {
        self.crlf_normalized
    }

    /// Rebuilds the normalized raw text from the line decomposition.
    pub fn reconstruct(&self) -> String {
        let mut out = self.lines.join("\n");
        if self.trailing_newline {
            out.push('\n');
        }
        out
    }

    /// Number of whitespace-delimited tokens in the raw text.
    pub fn token_count(&self) -> usize {
        self.raw_text.split_whitespace().count()
    }
}

/// Convenience wrapper matching the free-function naming used by callers.
pub fn split_lines(raw_text: &str) -> Result<ToolObservation, TextError> {
    ToolObservation::parse(raw_text)
}

/// Contiguous, inclusive, 1-based line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    start: usize,
    end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self, TextError> {
        if start == 0 || start > end {
            return Err(TextError::InvalidSpan { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.start, self.end)
    }
}

/// Sorted, disjoint, non-adjacent set of spans. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SpanSet {
    spans: Vec<Span>,
}

impl SpanSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and merges overlapping or adjacent spans after checking each one
    /// against `line_count`.
    pub fn normalize(spans: &[Span], line_count: usize) -> Result<Self, TextError> {
        for span in spans {
            if span.end > line_count {
                return Err(TextError::SpanOutOfRange {
                    start: span.start,
                    end: span.end,
                    line_count,
                });
            }
        }
        let mut sorted = spans.to_vec();
        sorted.sort_unstable();
        let mut merged: Vec<Span> = Vec::with_capacity(sorted.len());
        for span in sorted {
            match merged.last_mut() {
                Some(last) if span.start <= last.end + 1 => last.end = last.end.max(span.end),
                _ => merged.push(span),
            }
        }
        Ok(Self { spans: merged })
    }

    /// Builds a span set from `(start, end)` pairs, validating each.
    pub fn from_pairs(pairs: &[(usize, usize)], line_count: usize) -> Result<Self, TextError> {
        let spans = pairs
            .iter()
            .map(|&(s, e)| Span::new(s, e))
            .collect::<Result<Vec<_>, _>>()?;
        Self::normalize(&spans, line_count)
    }

    /// Minimal span set covering exactly `indices`.
    pub fn from_lineset(indices: &BTreeSet<usize>, line_count: usize) -> Result<Self, TextError> {
        let mut spans: Vec<Span> = Vec::new();
        for &index in indices {
            if index == 0 || index > line_count {
                return Err(TextError::IndexOutOfRange { index, line_count });
            }
            match spans.last_mut() {
                Some(last) if last.end + 1 == index => last.end = index,
                _ => spans.push(Span {
                    start: index,
                    end: index,
                }),
            }
        }
        Ok(Self { spans })
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Number of covered lines.
    pub fn covered_lines(&self) -> usize {
        self.spans.iter().map(Span::len).sum()
    }

    pub fn max_end(&self) -> Option<usize> {
        self.spans.last().map(|s| s.end)
    }

    /// Union of covered indices.
    pub fn to_lineset(&self) -> BTreeSet<usize> {
        self.spans.iter().flat_map(|s| s.start..=s.end).collect()
    }

    pub fn iter_lines(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|s| s.start..=s.end)
    }

    pub fn to_pairs(&self) -> Vec<(usize, usize)> {
        self.spans.iter().map(|s| (s.start, s.end)).collect()
    }

    /// Checks that every span lies within `line_count`.
    pub fn check_range(&self, line_count: usize) -> Result<(), TextError> {
        match self.spans.iter().find(|s| s.end > line_count) {
            Some(s) => Err(TextError::SpanOutOfRange {
                start: s.start,
                end: s.end,
                line_count,
            }),
            None => Ok(()),
        }
    }
}

impl Serialize for SpanSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[usize; 2]> = self.spans.iter().map(|s| [s.start, s.end]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpanSet {
    /// Deserializes without a line count; range checks happen at validation.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[usize; 2]>::deserialize(deserializer)?;
        let pairs: Vec<(usize, usize)> = pairs.into_iter().map(|[s, e]| (s, e)).collect();
        SpanSet::from_pairs(&pairs, usize::MAX).map_err(serde::de::Error::custom)
    }
}

pub fn normalize_spans(spans: &[Span], line_count: usize) -> Result<SpanSet, TextError> {
    SpanSet::normalize(spans, line_count)
}

pub fn spans_to_lineset(spanset: &SpanSet) -> BTreeSet<usize> {
    spanset.to_lineset()
}

pub fn lineset_to_spans(indices: &BTreeSet<usize>, line_count: usize) -> Result<SpanSet, TextError> {
    SpanSet::from_lineset(indices, line_count)
}

/// A short task-conditioned extraction query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query(String);

impl Query {
    pub fn new(text: impl AsRef<str>) -> Result<Self, TextError> {
        let trimmed = text.as_ref().trim();
        if trimmed.is_empty() {
            return Err(TextError::EmptyQuery);
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `"<n>: <content>"` per line, unpadded and 1-based.
pub fn render_numbered(obs: &ToolObservation) -> String {
    render_lines(obs, 1..=obs.line_count())
}

pub(crate) fn render_lines(obs: &ToolObservation, indices: impl IntoIterator<Item = usize>) -> String {
    let mut out = String::new();
    for (k, index) in indices.into_iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&index.to_string());
        out.push_str(": ");
        out.push_str(obs.line(index).unwrap_or_default());
    }
    out
}

/// Covered lines, verbatim, joined with `\n`.
pub fn extract_span_text(obs: &ToolObservation, spanset: &SpanSet) -> String {
    extract_lines(obs, spanset.iter_lines())
}

pub(crate) fn extract_lines(obs: &ToolObservation, indices: impl IntoIterator<Item = usize>) -> String {
    indices
        .into_iter()
        .filter_map(|i| obs.line(i))
        .collect::<Vec<_>>()
        .join("\n")
}
