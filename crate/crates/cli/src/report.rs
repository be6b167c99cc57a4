use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::Value;
use toolprune_core::metrics::{tradeoff_csv, tradeoff_points, AggregateReport};

use crate::common::{emit, ensure_new_output, read_text};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics JSON files written by `eval`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accepts an `eval` output file or a bare aggregate report.
fn load(path: &Path) -> Result<AggregateReport> {
    let value: Value = serde_json::from_str(&read_text(path)?).with_context(|| format!("{} is not JSON", path.display()))?;
    let report = value.get("report").cloned().unwrap_or(value);
    serde_json::from_value(report).with_context(|| format!("{} is not a metrics report", path.display()))
}

pub fn run(args: &ReportArgs) -> Result<()> {
    if let Some(out) = &args.out {
        let inputs: Vec<&std::path::Path> = args.reports.iter().map(|p| p.as_path()).collect();
        ensure_new_output(out, &inputs)?;
    }
    let mut seen: BTreeMap<String, &PathBuf> = BTreeMap::new();
    let mut reports = Vec::new();
    for path in &args.reports {
        let report = load(path)?;
        if let Some(first) = seen.insert(report.system.clone(), path) {
            bail!(
                "duplicate system label {:?} in {} and {}",
                report.system,
                first.display(),
                path.display()
            );
        }
        if report.system.contains(',') {
            bail!("system label {:?} contains a comma", report.system);
        }
        reports.push(report);
    }
    emit(args.out.as_ref(), &tradeoff_csv(&tradeoff_points(&reports)))
}
