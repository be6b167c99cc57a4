//! Corpus statistics: source composition and per-tool token averages.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{BenchmarkExample, DatasetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolStats {
    pub rows: usize,
    pub mean_input_tokens: f64,
    pub mean_gold_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub sources: BTreeMap<String, usize>,
    pub splits: BTreeMap<String, usize>,
    pub tools: BTreeMap<String, ToolStats>,
}

pub fn dataset_stats(examples: &[BenchmarkExample]) -> Result<DatasetStats, DatasetError> {
    if examples.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut ordered: Vec<&BenchmarkExample> = examples.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let mut sources: BTreeMap<String, usize> = BTreeMap::new();
    let mut splits: BTreeMap<String, usize> = BTreeMap::new();
    let mut sums: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for ex in ordered {
        *sources.entry(ex.source.label().to_string()).or_default() += 1;
        let split = ex.split.map_or("unassigned", |s| s.label());
        *splits.entry(split.to_string()).or_default() += 1;
        let entry = sums.entry(ex.tool.clone()).or_default();
        entry.0 += 1;
        entry.1 += ex.observation().token_count();
        entry.2 += ex.gold_text().split_whitespace().count();
    }
    let tools = sums
        .into_iter()
        .map(|(tool, (rows, input, gold))| {
            (
                tool,
                ToolStats {
                    rows,
                    mean_input_tokens: input as f64 / rows as f64,
                    mean_gold_tokens: gold as f64 / rows as f64,
                },
            )
        })
        .collect();
    Ok(DatasetStats {
        total: examples.len(),
        sources,
        splits,
        tools,
    })
}

impl DatasetStats {
    /// Aligned plain-text rendering; tools sorted by descending row count.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>8}", "source", "rows");
        for (source, n) in &self.sources {
            let _ = writeln!(out, "{source:<16} {n:>8}");
        }
        let _ = writeln!(out, "{:<16} {:>8}", "total", self.total);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>8}", "split", "rows");
        for (split, n) in &self.splits {
            let _ = writeln!(out, "{split:<16} {n:>8}");
        }
        let _ = writeln!(out);
        let width = self.tools.keys().map(String::len).max().unwrap_or(4).max(4);
        let _ = writeln!(out, "{:<width$} {:>8} {:>12} {:>12}", "tool", "rows", "avg_input", "avg_gold");
        let mut tools: Vec<(&String, &ToolStats)> = self.tools.iter().collect();
        tools.sort_by(|a, b| b.1.rows.cmp(&a.1.rows).then(a.0.cmp(b.0)));
        for (tool, s) in tools {
            let _ = writeln!(
                out,
                "{tool:<width$} {:>8} {:>12.1} {:>12.1}",
                s.rows, s.mean_input_tokens, s.mean_gold_tokens
            );
        }
        out
    }
}
