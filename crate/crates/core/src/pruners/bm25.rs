//! Okapi BM25 over the lines of a single observation.
//!
//! Every line is a document and the observation is the whole corpus:
//!
//! ```text
//! idf(t)      = ln((N - df + 0.5) / (df + 0.5) + 1)
//! score(d, q) = Σ idf(t) · tf·(k1 + 1) / (tf + k1·(1 - b + b·|d| / avgdl))
//! ```

use std::collections::HashMap;

use crate::text::{Query, ToolObservation};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// `(line index, score)` for every line, in line order.
pub fn bm25_scores(query: &Query, obs: &ToolObservation, params: Bm25Params) -> Vec<(usize, f64)> {
    let docs: Vec<Vec<String>> = obs.lines().iter().map(|l| tokenize(l)).collect();
    let n = docs.len();

    // Summation order is fixed by sorting, so token order never changes a score.
    let mut query_terms = tokenize(query.as_str());
    query_terms.sort();

    let total_len: usize = docs.iter().map(Vec::len).sum();
    if query_terms.is_empty() || total_len == 0 {
        return (1..=n).map(|i| (i, 0.0)).collect();
    }
    let avgdl = total_len as f64 / n as f64;

    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in &docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let idf = |term: &str| {
        let d = df.get(term).copied().unwrap_or(0) as f64;
        ((n as f64 - d + 0.5) / (d + 0.5) + 1.0).ln()
    };
    let idfs: Vec<f64> = query_terms.iter().map(|t| idf(t)).collect();

    docs.iter()
        .enumerate()
        .map(|(k, doc)| {
            let len_norm = params.k1 * (1.0 - params.b + params.b * doc.len() as f64 / avgdl);
            let mut score = 0.0;
            for (term, idf) in query_terms.iter().zip(&idfs) {
                let tf = doc.iter().filter(|t| *t == term).count();
                if tf == 0 {
                    continue;
                }
                let tf = tf as f64;
                score += idf * tf * (params.k1 + 1.0) / (tf + len_norm);
            }
            (k + 1, score)
        })
        .collect()
}

/// Best line score for the query; 0 when no query term occurs.
pub fn top_score(query: &Query, obs: &ToolObservation, params: Bm25Params) -> f64 {
    bm25_scores(query, obs, params)
        .into_iter()
        .map(|(_, s)| s)
        .fold(0.0, f64::max)
}

/// Top `k` line indices by score, ties broken by smaller index.
pub fn top_k(scores: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut picked: Vec<usize> = ranked.into_iter().take(k).map(|(i, _)| i).collect();
    picked.sort_unstable();
    picked
}
