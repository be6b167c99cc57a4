//! Automatic curation filters with a human review queue.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::BenchmarkExample;
use crate::pruners::bm25::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NearDuplicate,
    TrivialOutput,
    OverlyBroad,
    InvalidSpans,
}

impl RejectReason {
    pub fn label(self) -> &'static str {
        match self {
            RejectReason::NearDuplicate => "near_duplicate",
            RejectReason::TrivialOutput => "trivial_output",
            RejectReason::OverlyBroad => "overly_broad",
            RejectReason::InvalidSpans => "invalid_spans",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationThresholds {
    /// Outputs with at most this many lines are trivial.
    pub trivial_max_lines: usize,
    /// Character shingle width for near-duplicate detection.
    pub shingle_size: usize,
    /// Jaccard similarity above which a later example is a near duplicate.
    pub near_duplicate_jaccard: f64,
    /// Gold coverage (fraction of lines) above which spans are overly broad.
    pub overly_broad_coverage: f64,
    /// Observations longer than this with no query/gold token overlap are queued.
    pub review_min_lines: usize,
}

impl Default for CurationThresholds {
    fn default() -> Self {
        Self {
            trivial_max_lines: 2,
            shingle_size: 8,
            near_duplicate_jaccard: 0.9,
            overly_broad_coverage: 0.6,
            review_min_lines: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectReason,
    /// For near duplicates, the kept example it duplicates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub kept: Vec<String>,
    pub rejected: Vec<Rejection>,
    pub review_queue: Vec<String>,
    pub reason_counts: BTreeMap<String, usize>,
}

/// Gold coverage as a fraction of observation lines.
pub fn gold_coverage(example: &BenchmarkExample) -> f64 {
    example.gold_spans.covered_lines() as f64 / example.observation().line_count() as f64
}

/// Hashed character shingles of width `k`, sorted and deduplicated. Texts
/// shorter than `k` form a single shingle.
pub fn shingles(text: &str, k: usize) -> Vec<u64> {
    let chars: Vec<char> = text.chars().collect();
    let hash = |window: &[char]| {
        let mut h = DefaultHasher::new();
        window.hash(&mut h);
        h.finish()
    };
    let mut out: Vec<u64> = if chars.len() <= k {
        vec![hash(&chars)]
    } else {
        chars.windows(k).map(hash).collect()
    };
    out.sort_unstable();
    out.dedup();
    out
}

pub fn jaccard(a: &[u64], b: &[u64]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Exact near-duplicate search over kept examples. A near duplicate needs
/// both a near-identical output and a near-identical query, so a negative
/// that reuses a positive's output under another query survives.
///
/// Candidates come from prefix filtering over output shingles: two sets
/// with Jaccard >= t share a token within the first `|x| - ceil(t|x|) + 1`
/// tokens of each (in a common order), so indexing only those prefixes
/// misses no pair above the threshold.
struct DuplicateIndex {
    threshold: f64,
    sets: Vec<(String, Vec<u64>, Vec<u64>)>,
    prefix_index: HashMap<u64, Vec<usize>>,
}

impl DuplicateIndex {
    fn new(threshold: f64) -> Self {
        Self {
            threshold,
            sets: Vec::new(),
            prefix_index: HashMap::new(),
        }
    }

    fn prefix_len(&self, n: usize) -> usize {
        let overlap = ((self.threshold * n as f64) - 1e-9).ceil().max(0.0) as usize;
        (n + 1).saturating_sub(overlap).min(n)
    }

    fn find(&self, set: &[u64], query: &[u64]) -> Option<&str> {
        let mut checked = HashSet::new();
        for token in &set[..self.prefix_len(set.len())] {
            for &k in self.prefix_index.get(token).into_iter().flatten() {
                if !checked.insert(k) {
                    continue;
                }
                let (id, other, other_query) = &self.sets[k];
                let (lo, hi) = (set.len().min(other.len()), set.len().max(other.len()));
                if (lo as f64) < self.threshold * hi as f64 {
                    continue;
                }
                if jaccard(set, other) > self.threshold && jaccard(query, other_query) > self.threshold {
                    return Some(id);
                }
            }
        }
        None
    }

    fn insert(&mut self, id: &str, set: Vec<u64>, query: Vec<u64>) {
        let k = self.sets.len();
        for token in &set[..self.prefix_len(set.len())] {
            self.prefix_index.entry(*token).or_default().push(k);
        }
        self.sets.push((id.to_string(), set, query));
    }
}

/// Partitions examples into kept and rejected ids. Kept examples that look
/// mislabeled are also listed in the review queue for a human to judge.
///
/// Examples are processed in id order; a near duplicate is judged against
/// earlier kept examples only, so the earlier id survives.
pub fn curate(examples: &[BenchmarkExample], thresholds: &CurationThresholds) -> CurationReport {
    let mut ordered: Vec<&BenchmarkExample> = examples.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let mut report = CurationReport::default();
    let mut index = DuplicateIndex::new(thresholds.near_duplicate_jaccard);

    for ex in ordered {
        let obs = ex.observation();
        let reject = |reason| Rejection {
            id: ex.id.clone(),
            reason,
            duplicate_of: None,
        };
        if ex.gold_spans.check_range(obs.line_count()).is_err() {
            report.rejected.push(reject(RejectReason::InvalidSpans));
            continue;
        }
        if obs.line_count() <= thresholds.trivial_max_lines {
            report.rejected.push(reject(RejectReason::TrivialOutput));
            continue;
        }
        if gold_coverage(ex) > thresholds.overly_broad_coverage {
            report.rejected.push(reject(RejectReason::OverlyBroad));
            continue;
        }
        let set = shingles(&ex.tool_output, thresholds.shingle_size);
        let query = shingles(ex.query.as_str(), thresholds.shingle_size);
        if let Some(original) = index.find(&set, &query) {
            report.rejected.push(Rejection {
                duplicate_of: Some(original.to_string()),
                ..reject(RejectReason::NearDuplicate)
            });
            continue;
        }
        if needs_review(ex, thresholds) {
            report.review_queue.push(ex.id.clone());
        }
        index.insert(&ex.id, set, query);
        report.kept.push(ex.id.clone());
    }

    for r in &report.rejected {
        *report.reason_counts.entry(r.reason.label().to_string()).or_default() += 1;
    }
    report
}

/// Positive, long observation whose gold text shares no token with the query.
fn needs_review(ex: &BenchmarkExample, thresholds: &CurationThresholds) -> bool {
    if ex.is_negative() || ex.observation().line_count() <= thresholds.review_min_lines {
        return false;
    }
    let query: HashSet<String> = tokenize(ex.query.as_str()).into_iter().collect();
    !tokenize(&ex.gold_text()).iter().any(|t| query.contains(t))
}
