//! Negative examples from mismatched (query, observation) pairs.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{BenchmarkExample, DatasetError, Source};
use crate::pruners::bm25::{top_score, Bm25Params};
use crate::text::SpanSet;

/// Draws allowed per requested negative before giving up.
pub const DRAWS_PER_NEGATIVE: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeBatch {
    pub negatives: Vec<BenchmarkExample>,
    /// Requested minus produced; non-zero when the draw budget ran out.
    pub shortfall: usize,
}

/// The pair is a valid negative when the tool families differ or the query has
/// no lexical support anywhere in the observation.
pub fn is_mismatched(query_side: &BenchmarkExample, output_side: &BenchmarkExample) -> bool {
    query_side.tool != output_side.tool
        || top_score(&query_side.query, output_side.observation(), Bm25Params::default()) == 0.0
}

fn negative_id(seed: u64, query_id: &str, output_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(query_id.as_bytes());
    h.update([0]);
    h.update(output_id.as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("neg-{hex}")
}

/// Pairs the query of one positive with the output of another, ChaCha8 seeded
/// by `seed`. Positives are taken in id order so input order does not matter.
pub fn build_negatives(examples: &[BenchmarkExample], count: usize, seed: u64) -> Result<NegativeBatch, DatasetError> {
    let mut positives: Vec<&BenchmarkExample> = examples.iter().filter(|e| !e.is_negative()).collect();
    if positives.len() < 2 {
        return Err(DatasetError::TooFewPositives(positives.len()));
    }
    positives.sort_by(|a, b| a.id.cmp(&b.id));

    let existing: HashSet<&str> = examples.iter().map(|e| e.id.as_str()).collect();
    let mut used = HashSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut negatives = Vec::with_capacity(count);
    let budget = count.saturating_mul(DRAWS_PER_NEGATIVE).max(100);

    for _ in 0..budget {
        if negatives.len() == count {
            break;
        }
        let i = rng.random_range(0..positives.len());
        let j = rng.random_range(0..positives.len());
        if i == j || !used.insert((i, j)) {
            continue;
        }
        let (q, o) = (positives[i], positives[j]);
        if !is_mismatched(q, o) {
            continue;
        }
        let id = negative_id(seed, &q.id, &o.id);
        if existing.contains(id.as_str()) {
            continue;
        }
        let mut neg = BenchmarkExample::new(
            id,
            Source::SyntheticNeg,
            o.tool.clone(),
            None,
            q.query.as_str(),
            o.tool_output.clone(),
            SpanSet::empty(),
            None,
        )?;
        neg.extra.insert("query_from".into(), q.id.clone().into());
        neg.extra.insert("output_from".into(), o.id.clone().into());
        negatives.push(neg);
    }

    let shortfall = count - negatives.len();
    if shortfall > 0 {
        log::warn!("built {} of {count} negatives before exhausting {budget} draws", negatives.len());
    }
    Ok(NegativeBatch { negatives, shortfall })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(id: &str, tool: &str, query: &str, output: &str) -> BenchmarkExample {
        let n = output.lines().count();
        BenchmarkExample::new(id, Source::SyntheticPos, tool, None, query, output, SpanSet::from_pairs(&[(1, n)], n).unwrap(), None)
            .unwrap()
    }

    fn corpus() -> Vec<BenchmarkExample> {
        vec![
            pos("a", "pip_install", "Find the numpy version conflict", "ERROR: numpy 1.21 conflicts with pandas\nok"),
            pos("b", "docker_logs", "Find the database connection error", "db: connection refused\nworker started\nlistening on :8080"),
            pos("c", "grep", "Find the definition of polyval", "xarray/core/computation.py:1850:def polyval(coord, coeffs):"),
            pos("d", "grep", "Find usages of transpose", "xarray/core/dataarray.py:12:    return self.transpose()"),
        ]
    }

    #[test]
    fn numpy_query_on_docker_logs_is_valid() {
        let c = corpus();
        assert!(is_mismatched(&c[0], &c[1]));
    }

    #[test]
    fn same_family_needs_zero_overlap() {
        let c = corpus();
        // "polyval" does not occur in d's output; "transpose" does not occur in c's.
        assert!(is_mismatched(&c[2], &c[3]));
        let e = pos("e", "grep", "Find the definition of polyval", "xarray/core/x.py:3:polyval()");
        assert!(!is_mismatched(&c[2], &e));
    }

    #[test]
    fn negatives_are_empty_mismatched_and_deterministic() {
        let c = corpus();
        let a = build_negatives(&c, 5, 9).unwrap();
        let b = build_negatives(&c, 5, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.negatives.len(), 5);
        let mut ids = HashSet::new();
        for n in &a.negatives {
            assert!(n.gold_spans.is_empty());
            assert_eq!(n.source, Source::SyntheticNeg);
            assert!(ids.insert(n.id.clone()));
            let q = c.iter().find(|e| e.id == n.extra["query_from"]).unwrap();
            let o = c.iter().find(|e| e.id == n.extra["output_from"]).unwrap();
            assert_ne!(q.id, o.id);
            assert!(is_mismatched(q, o));
            assert_eq!(n.tool_output, o.tool_output);
        }
    }

    #[test]
    fn shortfall_when_pairs_run_out() {
        let c = corpus();
        // 4 positives give at most 12 ordered pairs.
        let batch = build_negatives(&c, 20, 1).unwrap();
        assert!(batch.shortfall >= 8);
        assert_eq!(batch.negatives.len() + batch.shortfall, 20);
    }

    #[test]
    fn needs_two_positives() {
        let c = corpus();
        assert!(matches!(build_negatives(&c[..1], 1, 0), Err(DatasetError::TooFewPositives(1))));
    }
}
