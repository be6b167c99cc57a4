//! Line-level scoring of predictions against gold spans.

pub mod fuzzy;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::output::Prediction;
use crate::text::{SpanSet, TextError, ToolObservation};

pub use fuzzy::{fuzzy_similarity, similarity_exceeds};

/// Tolerant matching threshold; similarity must be strictly greater.
pub const TOLERANT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold spans invalid for observation: {0}")]
    InvalidGold(#[from] TextError),
    #[error("cannot aggregate an empty set of rows")]
    NoRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Strict,
    Tolerant,
}

/// Many-to-many line matching. Returns `(matched_pred, matched_gold)`.
pub fn match_lines(pred: &[(usize, &str)], gold: &[(usize, &str)], mode: MatchMode) -> (usize, usize) {
    match mode {
        MatchMode::Strict => {
            let gold_texts: HashSet<&str> = gold.iter().map(|(_, t)| t.trim_end()).collect();
            let pred_texts: HashSet<&str> = pred.iter().map(|(_, t)| t.trim_end()).collect();
            (
                pred.iter().filter(|(_, t)| gold_texts.contains(t.trim_end())).count(),
                gold.iter().filter(|(_, t)| pred_texts.contains(t.trim_end())).count(),
            )
        }
        MatchMode::Tolerant => {
            let mut cache: Vec<Option<bool>> = vec![None; pred.len() * gold.len()];
            let mut matches = |p: usize, g: usize| -> bool {
                let slot = &mut cache[p * gold.len() + g];
                *slot.get_or_insert_with(|| {
                    similarity_exceeds(pred[p].1, gold[g].1, TOLERANT_THRESHOLD)
                })
            };
            let matched_pred = (0..pred.len())
                .filter(|&p| (0..gold.len()).any(|g| matches(p, g)))
                .count();
            let matched_gold = (0..gold.len())
                .filter(|&g| (0..pred.len()).any(|p| matches(p, g)))
                .count();
            (matched_pred, matched_gold)
        }
    }
}

/// Per-example scores. Headline precision/recall/F1 use tolerant matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub precision: f64,
    pub recall: f64,
    pub strict_precision: f64,
    pub strict_recall: f64,
    pub strict_f1: f64,
    pub tolerant_f1: f64,
    pub exact_match: f64,
    /// Fraction of whitespace tokens removed.
    pub compression: f64,
    /// Fraction of lines removed.
    pub line_compression: f64,
    pub is_negative: bool,
    pub empty_prediction: bool,
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_example(
    pred: &Prediction,
    gold: &SpanSet,
    obs: &ToolObservation,
) -> Result<MetricsRow, MetricsError> {
    gold.check_range(obs.line_count())?;

    // Aligned lines, one per index; the first emission for an index wins.
    let mut seen = HashSet::new();
    let pred_lines: Vec<(usize, &str)> = pred
        .lines
        .iter()
        .filter_map(|l| l.index.map(|i| (i, l.text.as_str())))
        .filter(|(i, _)| seen.insert(*i))
        .collect();
    let predicted_count = pred_lines.len() + pred.unaligned_line_count();
    let gold_lines: Vec<(usize, &str)> = gold
        .iter_lines()
        .map(|i| (i, obs.line(i).unwrap_or_default()))
        .collect();

    let input_tokens = obs.token_count();
    let predicted_tokens = pred.token_count();
    let compression = if input_tokens == 0 {
        if predicted_tokens == 0 { 1.0 } else { 0.0 }
    } else {
        (1.0 - predicted_tokens as f64 / input_tokens as f64).clamp(0.0, 1.0)
    };
    let line_compression = (1.0 - predicted_count as f64 / obs.line_count() as f64).clamp(0.0, 1.0);
    let empty_prediction = pred.is_empty();
    let is_negative = gold.is_empty();

    let mut row = MetricsRow {
        precision: 0.0,
        recall: 0.0,
        strict_precision: 0.0,
        strict_recall: 0.0,
        strict_f1: 0.0,
        tolerant_f1: 0.0,
        exact_match: 0.0,
        compression,
        line_compression,
        is_negative,
        empty_prediction,
    };

    if is_negative {
        if empty_prediction {
            row.precision = 1.0;
            row.recall = 1.0;
            row.strict_precision = 1.0;
            row.strict_recall = 1.0;
            row.strict_f1 = 1.0;
            row.tolerant_f1 = 1.0;
            row.exact_match = 1.0;
        }
        return Ok(row);
    }
    if predicted_count == 0 {
        return Ok(row);
    }

    let (tp, tg) = match_lines(&pred_lines, &gold_lines, MatchMode::Tolerant);
    let (sp, sg) = match_lines(&pred_lines, &gold_lines, MatchMode::Strict);
    row.precision = ratio(tp, predicted_count);
    row.recall = ratio(tg, gold_lines.len());
    row.tolerant_f1 = f1(row.precision, row.recall);
    row.strict_precision = ratio(sp, predicted_count);
    row.strict_recall = ratio(sg, gold_lines.len());
    row.strict_f1 = f1(row.strict_precision, row.strict_recall);

    let exact = pred.unaligned_line_count() == 0
        && pred.indices == gold.to_lineset()
        && pred_lines
            .iter()
            .all(|(i, t)| obs.line(*i).is_some_and(|src| src.trim_end() == t.trim_end()));
    row.exact_match = if exact { 1.0 } else { 0.0 };
    Ok(row)
}

/// Arithmetic means of every metric over a group of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub count: usize,
    pub precision: f64,
    pub recall: f64,
    pub strict_precision: f64,
    pub strict_recall: f64,
    pub strict_f1: f64,
    pub f1: f64,
    pub exact_match: f64,
    pub compression: f64,
    pub line_compression: f64,
    pub negative_count: usize,
    /// Fraction of negative rows with an empty prediction; absent without negatives.
    pub negative_empty_rate: Option<f64>,
}

impl MetricMeans {
    fn from_rows<'a>(rows: impl Iterator<Item = &'a MetricsRow>) -> Self {
        let mut sums = [0.0f64; 9];
        let mut count = 0usize;
        let mut negatives = 0usize;
        let mut negative_empty = 0usize;
        for row in rows {
            let values = [
                row.precision,
                row.recall,
                row.strict_precision,
                row.strict_recall,
                row.strict_f1,
                row.tolerant_f1,
                row.exact_match,
                row.compression,
                row.line_compression,
            ];
            for (s, v) in sums.iter_mut().zip(values) {
                *s += v;
            }
            count += 1;
            if row.is_negative {
                negatives += 1;
                negative_empty += usize::from(row.empty_prediction);
            }
        }
        let mean = |s: f64| if count == 0 { 0.0 } else { s / count as f64 };
        Self {
            count,
            precision: mean(sums[0]),
            recall: mean(sums[1]),
            strict_precision: mean(sums[2]),
            strict_recall: mean(sums[3]),
            strict_f1: mean(sums[4]),
            f1: mean(sums[5]),
            exact_match: mean(sums[6]),
            compression: mean(sums[7]),
            line_compression: mean(sums[8]),
            negative_count: negatives,
            negative_empty_rate: (negatives > 0).then(|| negative_empty as f64 / negatives as f64),
        }
    }
}

/// A scored row with the keys aggregation groups and orders by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedRow {
    pub id: String,
    pub tool: String,
    pub metrics: MetricsRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub system: String,
    pub overall: MetricMeans,
    pub per_tool: BTreeMap<String, MetricMeans>,
    pub negative_empty_rate: Option<f64>,
    pub failures: usize,
}

impl AggregateReport {
    pub fn recall(&self) -> f64 {
        self.overall.recall
    }

    pub fn compression(&self) -> f64 {
        self.overall.compression
    }
}

/// Unweighted means overall and per tool family. Rows are summed in id order,
/// so the result does not depend on the order rows were produced in.
pub fn aggregate(system: &str, rows: &[KeyedRow]) -> Result<AggregateReport, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::NoRows);
    }
    let mut sorted: Vec<&KeyedRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.tool.cmp(&b.tool)));

    let overall = MetricMeans::from_rows(sorted.iter().map(|r| &r.metrics));
    let mut by_tool: BTreeMap<&str, Vec<&MetricsRow>> = BTreeMap::new();
    for r in &sorted {
        by_tool.entry(r.tool.as_str()).or_default().push(&r.metrics);
    }
    let per_tool = by_tool
        .into_iter()
        .map(|(tool, rows)| (tool.to_string(), MetricMeans::from_rows(rows.into_iter())))
        .collect();

    Ok(AggregateReport {
        system: system.to_string(),
        negative_empty_rate: overall.negative_empty_rate,
        overall,
        per_tool,
        failures: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub system: String,
    pub compression: f64,
    pub recall: f64,
}

/// One (system, compression, recall) row per report, sorted by system label.
pub fn tradeoff_points(reports: &[AggregateReport]) -> Vec<TradeoffPoint> {
    let mut points: Vec<TradeoffPoint> = reports
        .iter()
        .map(|r| TradeoffPoint {
            system: r.system.clone(),
            compression: r.compression(),
            recall: r.recall(),
        })
        .collect();
    points.sort_by(|a, b| a.system.cmp(&b.system));
    points
}

pub const TRADEOFF_CSV_HEADER: &str = "system,compression,recall";

pub fn tradeoff_csv(points: &[TradeoffPoint]) -> String {
    let mut out = String::from(TRADEOFF_CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!("{},{:.4},{:.4}\n", p.system, p.compression, p.recall));
    }
    out
}
