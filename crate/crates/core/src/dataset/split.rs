//! Group-atomic train/dev/test assignment.
//!
//! SWE rows are grouped by repository and synthetic rows by tool family; a
//! whole group lands in one split, chosen by a keyed hash of `(seed, group)`.

use sha2::{Digest, Sha256};

use super::{BenchmarkExample, DatasetError, Source, Split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    /// 10,508 / 240 / 618 of the curated release.
    fn default() -> Self {
        Self {
            train: 0.925,
            dev: 0.021,
            test: 0.054,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|r| r.is_nan() || *r <= 0.0) {
            return Err(DatasetError::Ratios("every ratio must be positive".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(DatasetError::Ratios(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    fn pick(&self, u: f64) -> Split {
        if u < self.train {
            Split::Train
        } else if u < self.train + self.dev {
            Split::Dev
        } else {
            Split::Test
        }
    }
}

/// Grouping key: `repo:<name>` for SWE rows, `tool:<family>` otherwise.
pub fn group_key(example: &BenchmarkExample) -> Result<String, DatasetError> {
    match example.source {
        Source::Swe => example
            .repo
            .as_deref()
            .filter(|r| !r.trim().is_empty())
            .map(|r| format!("repo:{r}"))
            .ok_or_else(|| DatasetError::MissingRepo(example.id.clone())),
        Source::SyntheticPos | Source::SyntheticNeg => Ok(format!("tool:{}", example.tool)),
    }
}

/// Uniform value in `[0, 1)` from SHA-256 of the seed and group key.
fn unit_hash(seed: u64, group: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(group.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn assign_splits(
    examples: &[BenchmarkExample],
    ratios: SplitRatios,
    seed: u64,
) -> Result<Vec<BenchmarkExample>, DatasetError> {
    ratios.validate()?;
    examples
        .iter()
        .map(|ex| {
            let key = group_key(ex)?;
            let mut out = ex.clone();
            out.split = Some(ratios.pick(unit_hash(seed, &key)));
            Ok(out)
        })
        .collect()
}
