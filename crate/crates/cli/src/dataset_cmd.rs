use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use toolprune_core::dataset::{
    assign_splits, build_negatives, curate, dataset_stats, export_sft, import_with_aliases, parse_examples,
    render_examples, sft::render_sft_jsonl, BenchmarkExample, CurationThresholds, SplitRatios,
};
use toolprune_core::teacher::{label_batch, RawObservation, TeacherConfig};

use crate::common::{emit, ensure_new_output, read_text, EndpointArgs};

#[derive(Debug, Subcommand)]
pub enum DatasetCmd {
    /// Check every row against the schema and invariants.
    Validate(InputArg),
    /// Assign train/dev/test splits grouped by repository or tool family.
    Split(SplitArgs),
    /// Drop trivial, overly broad and near-duplicate examples.
    Curate(CurateArgs),
    /// Build negatives by pairing mismatched queries and outputs.
    Negatives(NegativesArgs),
    /// Row, source, split and per-tool statistics.
    Stats(StatsArgs),
    /// Write prompt/completion pairs for fine-tuning.
    ExportSft(OutArgs),
    /// Label raw observations with a teacher model.
    Label(LabelArgs),
    /// Rename foreign field names onto the canonical schema.
    Import(ImportArgs),
}

#[derive(Debug, Args)]
pub struct InputArg {
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train, dev and test fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    pub input: PathBuf,
    /// Kept examples.
    #[arg(long)]
    pub out: PathBuf,
    /// Curation report JSON (rejections and review queue).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = CurationThresholds::default().near_duplicate_jaccard)]
    pub near_duplicate_jaccard: f64,
    #[arg(long, default_value_t = CurationThresholds::default().overly_broad_coverage)]
    pub overly_broad_coverage: f64,
    #[arg(long, default_value_t = CurationThresholds::default().trivial_max_lines)]
    pub trivial_max_lines: usize,
}

#[derive(Debug, Args)]
pub struct NegativesArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the input examples followed by the new negatives.
    #[arg(long)]
    pub include_input: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatsFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: StatsFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// JSONL of raw observations: tool, background_task, raw_text, optional source and repo.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip report JSON.
    #[arg(long)]
    pub skip_report: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
    /// Concurrent teacher requests.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Field rename, e.g. `--alias output=tool_output`. Repeatable.
    #[arg(long = "alias", value_parser = parse_alias)]
    pub aliases: Vec<(String, String)>,
}

fn parse_alias(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((from, to)) if !from.is_empty() && !to.is_empty() => Ok((from.to_string(), to.to_string())),
        _ => Err(format!("expected FROM=TO, got {s:?}")),
    }
}

fn load(path: &Path) -> Result<Vec<BenchmarkExample>> {
    parse_examples(&read_text(path)?).with_context(|| format!("invalid dataset {}", path.display()))
}

pub fn run(cmd: &DatasetCmd) -> Result<()> {
    match cmd {
        DatasetCmd::Validate(a) => {
            let examples = load(&a.input)?;
            let negatives = examples.iter().filter(|e| e.is_negative()).count();
            println!("ok: {} examples ({negatives} negatives)", examples.len());
            Ok(())
        }
        DatasetCmd::Split(a) => {
            ensure_new_output(&a.out, &[&a.input])?;
            let ratios = match a.ratios.as_deref() {
                Some([train, dev, test]) => SplitRatios {
                    train: *train,
                    dev: *dev,
                    test: *test,
                },
                Some(_) => bail!("--ratios takes three values"),
                None => SplitRatios::default(),
            };
            let split = assign_splits(&load(&a.input)?, ratios, a.seed)?;
            emit(Some(&a.out), &render_examples(&split))
        }
        DatasetCmd::Curate(a) => {
            ensure_new_output(&a.out, &[&a.input])?;
            if let Some(r) = &a.report {
                ensure_new_output(r, &[&a.input, &a.out])?;
            }
            let examples = load(&a.input)?;
            let thresholds = CurationThresholds {
                near_duplicate_jaccard: a.near_duplicate_jaccard,
                overly_broad_coverage: a.overly_broad_coverage,
                trivial_max_lines: a.trivial_max_lines,
                ..CurationThresholds::default()
            };
            let report = curate(&examples, &thresholds);
            let kept: HashSet<&str> = report.kept.iter().map(String::as_str).collect();
            let kept_examples: Vec<BenchmarkExample> =
                examples.into_iter().filter(|e| kept.contains(e.id.as_str())).collect();
            emit(Some(&a.out), &render_examples(&kept_examples))?;
            eprintln!(
                "kept {}, rejected {}, queued for review {}",
                report.kept.len(),
                report.rejected.len(),
                report.review_queue.len()
            );
            if let Some(r) = &a.report {
                emit(Some(r), &serde_json::to_string_pretty(&report)?)?;
            }
            Ok(())
        }
        DatasetCmd::Negatives(a) => {
            ensure_new_output(&a.out, &[&a.input])?;
            let mut examples = load(&a.input)?;
            let batch = build_negatives(&examples, a.count, a.seed)?;
            if batch.shortfall > 0 {
                log::warn!("draw budget exhausted: {} negatives short", batch.shortfall);
            }
            if !a.include_input {
                examples.clear();
            }
            examples.extend(batch.negatives);
            emit(Some(&a.out), &render_examples(&examples))
        }
        DatasetCmd::Stats(a) => {
            let stats = dataset_stats(&load(&a.input)?)?;
            let text = match a.format {
                StatsFormat::Json => serde_json::to_string_pretty(&stats)?,
                StatsFormat::Table => stats.to_table(),
            };
            emit(a.out.as_ref(), &text)
        }
        DatasetCmd::ExportSft(a) => {
            ensure_new_output(&a.out, &[&a.input])?;
            emit(Some(&a.out), &render_sft_jsonl(&export_sft(&load(&a.input)?)))
        }
        DatasetCmd::Label(a) => {
            ensure_new_output(&a.out, &[&a.input])?;
            let raws = read_text(&a.input)?
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str::<RawObservation>(l).with_context(|| format!("line {}: bad raw observation", i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = TeacherConfig {
                max_attempts: a.max_attempts,
                max_parallel_requests: a.workers,
                ..TeacherConfig::default()
            };
            let client = a.endpoint.client()?;
            let (examples, report) = label_batch(&raws, &cfg, client.as_ref())?;
            emit(Some(&a.out), &render_examples(&examples))?;
            eprintln!("labeled {}, skipped {}", examples.len(), report.skipped.len());
            if let Some(path) = &a.skip_report {
                emit(Some(path), &serde_json::to_string_pretty(&report)?)?;
            }
            Ok(())
        }
        DatasetCmd::Import(a) => {
            ensure_new_output(&a.out, &[&a.input])?;
            let examples = import_with_aliases(&read_text(&a.input)?, &a.aliases)?;
            emit(Some(&a.out), &render_examples(&examples))
        }
    }
}
