//! The `<relevant_lines>` generative format: linearizing gold spans and
//! aligning untrusted model emissions back onto source line indices.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::metrics::fuzzy::{normalize_whitespace, similarity_exceeds};
use crate::metrics::fuzzy_similarity;
use crate::text::{extract_lines, render_lines, SpanSet, ToolObservation};

pub const OPEN_TAG: &str = "<relevant_lines>";
pub const CLOSE_TAG: &str = "</relevant_lines>";

/// Minimum similarity a candidate line must exceed to align to a source line.
pub const ALIGN_THRESHOLD: f64 = 0.5;

/// One emitted line and the source index it aligned to, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedLine {
    pub index: Option<usize>,
    pub text: String,
}

/// A predicted line set plus the text it was derived from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub indices: BTreeSet<usize>,
    pub raw_emission: String,
    pub lines: Vec<PredictedLine>,
}

impl Prediction {
    pub fn empty() -> Self {
        Self::default()
    }

    /// A prediction that copies source lines verbatim (heuristics, oracle).
    pub fn verbatim(obs: &ToolObservation, indices: BTreeSet<usize>) -> Self {
        let lines = indices
            .iter()
            .filter_map(|&i| {
                obs.line(i).map(|text| PredictedLine {
                    index: Some(i),
                    text: text.to_string(),
                })
            })
            .collect();
        let indices: BTreeSet<usize> = indices.into_iter().filter(|&i| obs.line(i).is_some()).collect();
        Self {
            raw_emission: extract_lines(obs, indices.iter().copied()),
            indices,
            lines,
        }
    }

    pub fn unaligned_line_count(&self) -> usize {
        self.lines.iter().filter(|l| l.index.is_none()).count()
    }

    /// True when nothing at all was emitted (no aligned and no unaligned lines).
    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Whitespace tokens across emitted line texts.
    pub fn token_count(&self) -> usize {
        self.lines.iter().map(|l| l.text.split_whitespace().count()).sum()
    }
}

/// Gold spans as numbered lines inside a tag block.
pub fn linearize_target(obs: &ToolObservation, spanset: &SpanSet) -> String {
    if spanset.is_empty() {
        return format!("{OPEN_TAG}\n{CLOSE_TAG}");
    }
    format!(
        "{OPEN_TAG}\n{}\n{CLOSE_TAG}",
        render_lines(obs, spanset.iter_lines())
    )
}

/// Interior of the first open tag through the last close tag, or `None` when
/// the block is missing or malformed.
pub fn tag_block_interior(emitted: &str) -> Option<&str> {
    let open = emitted.find(OPEN_TAG)?;
    let body_start = open + OPEN_TAG.len();
    let close = emitted.rfind(CLOSE_TAG)?;
    (close >= body_start).then(|| &emitted[body_start..close])
}

/// Splits `"<n>: content"` into `(n, content)`. One space after the colon is
/// optional so trimmed emissions of empty lines still parse.
fn split_number_prefix(line: &str) -> Option<(usize, &str)> {
    let trimmed = line.trim_start();
    let digits = trimmed.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = trimmed[digits..].strip_prefix(':')?;
    let n = trimmed[..digits].parse().ok()?;
    Some((n, rest.strip_prefix(' ').unwrap_or(rest)))
}

/// Aligns an arbitrary model emission onto the observation. Total: any input
/// yields a prediction.
///
/// Each non-blank candidate line is tried, in order, against
/// 1. its own `"<n>: "` prefix, when line `n` is similar enough,
/// 2. an exact (trailing-whitespace-insensitive) content match, preferring the
///    first occurrence after the previously aligned line,
/// 3. the most similar source line of comparable length.
///
/// Lines that survive none of these are kept as unaligned.
pub fn parse_model_output(emitted: &str, obs: &ToolObservation) -> Prediction {
    let candidate = tag_block_interior(emitted).unwrap_or(emitted);
    let mut aligner = Aligner::new(obs);
    let mut lines = Vec::new();

    for raw_line in candidate.split('\n') {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let prefixed = split_number_prefix(line);

        if let Some((n, content)) = prefixed {
            if let Some(source) = obs.line(n) {
                if similarity_exceeds(content, source, ALIGN_THRESHOLD) {
                    aligner.last = n;
                    lines.push(PredictedLine {
                        index: Some(n),
                        text: content.to_string(),
                    });
                    continue;
                }
            }
        }

        if line.trim().is_empty() {
            continue;
        }

        // A digit-colon lead may belong to the content itself (timestamps,
        // `file:line:` hits), so the unstripped line is tried as well.
        let stripped = prefixed.map_or(line, |(_, content)| content);
        let forms: &[&str] = if prefixed.is_some() { &[stripped, line] } else { &[line] };
        let aligned = forms
            .iter()
            .find_map(|t| aligner.exact(t).map(|i| (i, *t)))
            .or_else(|| forms.iter().find_map(|t| aligner.fuzzy(t).map(|i| (i, *t))));
        match aligned {
            Some((i, text)) => {
                aligner.last = i;
                lines.push(PredictedLine {
                    index: Some(i),
                    text: text.to_string(),
                });
            }
            None => lines.push(PredictedLine {
                index: None,
                text: stripped.to_string(),
            }),
        }
    }

    Prediction {
        indices: lines.iter().filter_map(|l| l.index).collect(),
        raw_emission: emitted.to_string(),
        lines,
    }
}

struct Aligner<'a> {
    obs: &'a ToolObservation,
    normalized: Vec<String>,
    last: usize,
}

impl<'a> Aligner<'a> {
    fn new(obs: &'a ToolObservation) -> Self {
        Self {
            obs,
            normalized: obs.lines().iter().map(|l| normalize_whitespace(l)).collect(),
            last: 0,
        }
    }

    fn exact(&self, text: &str) -> Option<usize> {
        let wanted = text.trim_end();
        let matches = |i: &usize| self.obs.line(*i).is_some_and(|l| l.trim_end() == wanted);
        let n = self.obs.line_count();
        ((self.last + 1)..=n)
            .find(matches)
            .or_else(|| (1..=self.last.min(n)).find(matches))
    }

    fn fuzzy(&self, text: &str) -> Option<usize> {
        let wanted = normalize_whitespace(text);
        let wanted_len = wanted.chars().count();
        if wanted_len == 0 {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, source) in self.normalized.iter().enumerate() {
            let source_len = source.chars().count();
            // Short source lines are substrings of almost any prose.
            if source_len * 2 < wanted_len || wanted_len * 2 < source_len {
                continue;
            }
            let sim = fuzzy_similarity(&wanted, source);
            if sim > ALIGN_THRESHOLD && best.is_none_or(|(_, b)| sim > b) {
                best = Some((k + 1, sim));
            }
        }
        best.map(|(i, _)| i)
    }
}
