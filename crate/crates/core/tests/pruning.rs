//! Baseline pruners and scoring on the kubectl fixture.

use std::path::PathBuf;

use toolprune_core::eval::{evaluate, System};
use toolprune_core::pruners::bm25::bm25_scores;
use toolprune_core::pruners::{Bm25Params, PruneInput};
use toolprune_core::{HeuristicPruner, Method, Pruner, PrunerConfig, Query, ToolObservation};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn kubectl() -> ToolObservation {
    ToolObservation::from_bytes(&std::fs::read(fixture("kubectl_describe.txt")).unwrap()).unwrap()
}

// Frozen from an independent Python implementation of Okapi BM25
// (k1 1.2, b 0.75, idf ln((N - df + 0.5) / (df + 0.5) + 1)).
#[test]
fn bm25_scores_match_frozen_oracle() {
    let obs = kubectl();
    let q = Query::new("Find the OOMKilled reason").unwrap();
    let scores = bm25_scores(&q, &obs, Bm25Params::default());
    assert_eq!(scores.len(), 250);
    for (i, s) in scores {
        let want = match i {
            26 => 13.151451004255687,
            24 => 6.230469331946321,
            _ => 0.0,
        };
        assert!((s - want).abs() < 1e-9, "line {i}: {s} vs {want}");
    }
}

#[test]
fn bm25_budget_keeps_the_hits_and_lowest_ties() {
    let obs = kubectl();
    let q = Query::new("Find the OOMKilled reason").unwrap();
    let pruner = HeuristicPruner::new(PrunerConfig::with_method(Method::Bm25)).unwrap();
    let p = pruner.prune(PruneInput { id: "k", query: &q, observation: &obs }).unwrap();
    let want: Vec<usize> = (1..=24).chain([26]).collect();
    assert_eq!(p.indices.into_iter().collect::<Vec<_>>(), want);
}

#[test]
fn oracle_scores_perfectly_on_corpus() {
    let path = fixture("corpus.jsonl");
    let examples = toolprune_core::dataset::read_examples(&path).unwrap();
    let out = evaluate(&System::Oracle, &examples, 2).unwrap();
    assert_eq!(out.report.failures, 0);
    assert!((out.report.recall() - 1.0).abs() < 1e-12);
    assert_eq!(out.results.len(), examples.len());
}
