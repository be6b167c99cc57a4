//! Pruning strategies: First-N, Last-N, Random, BM25 and an LLM-backed pruner.

pub mod bm25;
pub mod llm;
pub mod prompt;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chat::ChatError;
use crate::output::Prediction;
use crate::text::{Query, ToolObservation};

pub use bm25::{bm25_scores, Bm25Params};
pub use llm::{llm_prune, LlmPruner};
pub use prompt::{build_prompt, PROMPT_PREAMBLE, PROMPT_VERSION};

pub const DEFAULT_KEEP_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("invalid pruner config: {0}")]
    Config(String),
    #[error(transparent)]
    Chat(#[from] ChatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FirstN,
    LastN,
    Random,
    Bm25,
    Llm,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::FirstN => "first_n",
            Method::LastN => "last_n",
            Method::Random => "random",
            Method::Bm25 => "bm25",
            Method::Llm => "llm",
        }
    }

    pub fn is_heuristic(self) -> bool {
        self != Method::Llm
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = PruneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" | "first_n" | "first-n" => Ok(Method::FirstN),
            "last" | "last_n" | "last-n" => Ok(Method::LastN),
            "random" => Ok(Method::Random),
            "bm25" => Ok(Method::Bm25),
            "llm" => Ok(Method::Llm),
            other => Err(PruneError::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunerConfig {
    pub method: Method,
    pub keep_fraction: f64,
    pub seed: u64,
    pub bm25_k1: f64,
    pub bm25_b: f64,
}

impl Default for PrunerConfig {
    fn default() -> Self {
        Self {
            method: Method::Bm25,
            keep_fraction: DEFAULT_KEEP_FRACTION,
            seed: 0,
            bm25_k1: bm25::DEFAULT_K1,
            bm25_b: bm25::DEFAULT_B,
        }
    }
}

impl PrunerConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PruneError> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(PruneError::Config(format!(
                "keep_fraction must be in (0, 1], got {}",
                self.keep_fraction
            )));
        }
        if !(self.bm25_k1 >= 0.0 && (0.0..=1.0).contains(&self.bm25_b)) {
            return Err(PruneError::Config("bm25 k1 must be >= 0 and b in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn bm25_params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }
}

/// `ceil(keep_fraction * line_count)` clamped to `[1, line_count]`.
pub fn keep_count(line_count: usize, keep_fraction: f64) -> usize {
    // The epsilon keeps products like 0.1 * 30 = 3.0000000000000004 at 3.
    let raw = (keep_fraction * line_count as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).clamp(1, line_count.max(1))
}

pub fn prune_first(obs: &ToolObservation, cfg: &PrunerConfig) -> Prediction {
    let k = keep_count(obs.line_count(), cfg.keep_fraction);
    Prediction::verbatim(obs, (1..=k).collect())
}

pub fn prune_last(obs: &ToolObservation, cfg: &PrunerConfig) -> Prediction {
    let n = obs.line_count();
    let k = keep_count(n, cfg.keep_fraction);
    Prediction::verbatim(obs, (n - k + 1..=n).collect())
}

/// Stable 64-bit hash of an example id (first 8 bytes of SHA-256, little endian).
pub fn id_hash(example_id: &str) -> u64 {
    let digest = Sha256::digest(example_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Uniform sample of `keep_count` lines without replacement.
///
/// The generator is ChaCha8 seeded with `seed ^ id_hash(example_id)`, so the
/// sample depends only on the seed and the example, never on evaluation order.
pub fn prune_random(obs: &ToolObservation, cfg: &PrunerConfig, example_id: &str) -> Prediction {
    let n = obs.line_count();
    let k = keep_count(n, cfg.keep_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ id_hash(example_id));
    let picked: BTreeSet<usize> = rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    Prediction::verbatim(obs, picked)
}

pub fn prune_bm25(query: &Query, obs: &ToolObservation, cfg: &PrunerConfig) -> Prediction {
    let k = keep_count(obs.line_count(), cfg.keep_fraction);
    let scores = bm25_scores(query, obs, cfg.bm25_params());
    Prediction::verbatim(obs, bm25::top_k(&scores, k).into_iter().collect())
}

/// One pruning request.
#[derive(Debug, Clone, Copy)]
pub struct PruneInput<'a> {
    pub id: &'a str,
    pub query: &'a Query,
    pub observation: &'a ToolObservation,
}

pub trait Pruner: Send + Sync {
    fn label(&self) -> String;
    fn prune(&self, input: PruneInput<'_>) -> Result<Prediction, PruneError>;
}

/// The four line-budget baselines.
#[derive(Debug, Clone)]
pub struct HeuristicPruner {
    config: PrunerConfig,
}

impl HeuristicPruner {
    pub fn new(config: PrunerConfig) -> Result<Self, PruneError> {
        config.validate()?;
        if !config.method.is_heuristic() {
            return Err(PruneError::Config("llm is not a heuristic method".into()));
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &PrunerConfig {
        &self.config
    }
}

impl Pruner for HeuristicPruner {
    fn label(&self) -> String {
        self.config.method.label().to_string()
    }

    fn prune(&self, input: PruneInput<'_>) -> Result<Prediction, PruneError> {
        let cfg = &self.config;
        let obs = input.observation;
        Ok(match cfg.method {
            Method::FirstN => prune_first(obs, cfg),
            Method::LastN => prune_last(obs, cfg),
            Method::Random => prune_random(obs, cfg, input.id),
            Method::Bm25 => prune_bm25(input.query, obs, cfg),
            Method::Llm => unreachable!("rejected in HeuristicPruner::new"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numbered(n: usize) -> ToolObservation {
        let text: Vec<String> = (1..=n).map(|i| format!("line {i}")).collect();
        ToolObservation::parse(&text.join("\n")).unwrap()
    }

    fn cfg(method: Method, keep: f64) -> PrunerConfig {
        PrunerConfig {
            keep_fraction: keep,
            ..PrunerConfig::with_method(method)
        }
    }

    #[test]
    fn keep_count_examples() {
        assert_eq!(keep_count(10, 0.10), 1);
        assert_eq!(keep_count(501, 0.10), 51);
        assert_eq!(keep_count(3, 0.10), 1);
        assert_eq!(keep_count(30, 0.10), 3);
        assert_eq!(keep_count(7, 1.0), 7);
    }

    #[test]
    fn first_and_last() {
        let o = numbered(10);
        assert_eq!(prune_first(&o, &cfg(Method::FirstN, 0.1)).indices, BTreeSet::from([1]));
        assert_eq!(prune_last(&o, &cfg(Method::LastN, 0.1)).indices, BTreeSet::from([10]));
        let o = numbered(20);
        assert_eq!(prune_first(&o, &cfg(Method::FirstN, 0.1)).indices, BTreeSet::from([1, 2]));
        assert_eq!(prune_last(&o, &cfg(Method::LastN, 0.1)).indices, BTreeSet::from([19, 20]));
        assert_eq!(prune_first(&o, &cfg(Method::FirstN, 1.0)).indices.len(), 20);
    }

    #[test]
    fn random_is_deterministic_per_id() {
        let o = numbered(100);
        let c = PrunerConfig { seed: 7, ..cfg(Method::Random, 0.1) };
        let a = prune_random(&o, &c, "ex-1");
        assert_eq!(a, prune_random(&o, &c, "ex-1"));
        assert_eq!(a.indices.len(), 10);
        assert_ne!(a.indices, prune_random(&o, &c, "ex-2").indices);
        assert_eq!(prune_random(&o, &cfg(Method::Random, 1.0), "x").indices.len(), 100);
    }

    #[test]
    fn bm25_all_zero_falls_back_to_first_lines() {
        let o = numbered(20);
        let q = Query::new("kubernetes").unwrap();
        assert_eq!(prune_bm25(&q, &o, &cfg(Method::Bm25, 0.1)).indices, BTreeSet::from([1, 2]));
    }

    #[test]
    fn bm25_toy_corpus() {
        let o = ToolObservation::parse("build ok\nerror: missing semicolon\ndone").unwrap();
        let q = Query::new("error semicolon").unwrap();
        assert_eq!(prune_bm25(&q, &o, &cfg(Method::Bm25, 0.1)).indices, BTreeSet::from([2]));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(Method::Bm25, 0.0).validate().is_err());
        assert!(cfg(Method::Bm25, 1.5).validate().is_err());
        assert!(cfg(Method::Bm25, f64::NAN).validate().is_err());
        assert!(cfg(Method::Bm25, 1.0).validate().is_ok());
        assert!(HeuristicPruner::new(cfg(Method::Llm, 0.1)).is_err());
        assert_eq!("first".parse::<Method>().unwrap(), Method::FirstN);
        assert_eq!("last_n".parse::<Method>().unwrap(), Method::LastN);
        assert!("oracle".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn heuristics_keep_exactly_keep_count(
            n in 1usize..400,
            keep in 0.01f64..=1.0,
            seed in any::<u64>(),
            method in prop::sample::select(vec![Method::FirstN, Method::LastN, Method::Random, Method::Bm25]),
        ) {
            let o = numbered(n);
            let c = PrunerConfig { seed, ..cfg(method, keep) };
            let p = HeuristicPruner::new(c).unwrap();
            let q = Query::new("line 3").unwrap();
            let pred = p.prune(PruneInput { id: "x", query: &q, observation: &o }).unwrap();
            let k = keep_count(n, keep);
            prop_assert_eq!(pred.indices.len(), k);
            prop_assert!(pred.indices.iter().all(|&i| (1..=n).contains(&i)));
            prop_assert_eq!(pred.unaligned_line_count(), 0);
            let listed: Vec<usize> = pred.lines.iter().filter_map(|l| l.index).collect();
            prop_assert!(listed.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
