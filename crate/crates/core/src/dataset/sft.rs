//! Supervised fine-tuning export: prompt plus linearized gold target.

use serde::{Deserialize, Serialize};

use super::BenchmarkExample;
use crate::output::linearize_target;
use crate::pruners::build_prompt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftPair {
    pub prompt: String,
    pub completion: String,
}

pub fn export_sft(examples: &[BenchmarkExample]) -> Vec<SftPair> {
    examples
        .iter()
        .map(|ex| SftPair {
            prompt: build_prompt(&ex.query, ex.observation()),
            completion: linearize_target(ex.observation(), &ex.gold_spans),
        })
        .collect()
}

pub fn render_sft_jsonl(pairs: &[SftPair]) -> String {
    pairs
        .iter()
        .map(|p| serde_json::to_string(p).expect("pairs serialize") + "\n")
        .collect()
}
