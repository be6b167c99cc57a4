use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use toolprune_core::chat::{ChatClient, ChatError, EndpointConfig, HttpChatClient};
use toolprune_core::pruners::{Method, PruneError, PrunerConfig, DEFAULT_KEEP_FRACTION};
use toolprune_core::teacher::TeacherError;

/// Exit code for bad flags, unreadable input and invalid data.
pub const EXIT_USAGE: i32 = 2;
/// Exit code when the chat endpoint fails after retries.
pub const EXIT_UPSTREAM: i32 = 3;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let upstream = err.chain().any(|cause| {
        cause.is::<ChatError>()
            || matches!(cause.downcast_ref::<PruneError>(), Some(PruneError::Chat(_)))
            || matches!(cause.downcast_ref::<TeacherError>(), Some(TeacherError::Chat(_)))
    });
    if upstream {
        EXIT_UPSTREAM
    } else {
        EXIT_USAGE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(alias = "first_n", alias = "first-n")]
    First,
    #[value(alias = "last_n", alias = "last-n")]
    Last,
    Random,
    Bm25,
    Llm,
    Oracle,
}

impl MethodArg {
    /// The core pruning method; `None` for the oracle.
    pub fn method(self) -> Option<Method> {
        match self {
            MethodArg::First => Some(Method::FirstN),
            MethodArg::Last => Some(Method::LastN),
            MethodArg::Random => Some(Method::Random),
            MethodArg::Bm25 => Some(Method::Bm25),
            MethodArg::Llm => Some(Method::Llm),
            MethodArg::Oracle => None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PrunerArgs {
    /// Pruning system.
    #[arg(long, value_enum, default_value = "bm25")]
    pub method: MethodArg,
    /// Fraction of lines kept by the heuristic methods.
    #[arg(long, default_value_t = DEFAULT_KEEP_FRACTION)]
    pub keep_fraction: f64,
    /// Seed for the random method.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

impl PrunerArgs {
    pub fn config(&self, method: Method) -> Result<PrunerConfig> {
        let cfg = PrunerConfig {
            keep_fraction: self.keep_fraction,
            seed: self.seed,
            ..PrunerConfig::with_method(method)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EndpointArgs {
    /// Chat-completion endpoint, e.g. http://localhost:8000/v1
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    /// Retries after a transport error, 429 or 5xx.
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
}

impl EndpointArgs {
    pub fn config(&self) -> Result<EndpointConfig> {
        let (Some(url), Some(model)) = (&self.endpoint, &self.model) else {
            bail!("this method needs --endpoint and --model");
        };
        let mut cfg = EndpointConfig::new(url.clone(), model.clone());
        cfg.api_key_env = self.api_key_env.clone();
        cfg.request_timeout = Duration::from_secs(self.timeout_secs);
        cfg.max_retries = self.max_retries;
        Ok(cfg)
    }

    pub fn client(&self) -> Result<Arc<dyn ChatClient>> {
        // A missing key is a configuration problem, not an upstream failure.
        let client = HttpChatClient::new(self.config()?).map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(Arc::new(client))
    }
}

pub fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        Some(p) => fs::read(p).with_context(|| format!("cannot read {}", p.display())),
        None => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).context("cannot read stdin")?;
            Ok(buf)
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Refuses to overwrite any of the inputs.
pub fn ensure_new_output(out: &Path, inputs: &[&Path]) -> Result<()> {
    if let Some(input) = inputs.iter().find(|i| same_file(out, i)) {
        bail!("refusing to overwrite input {} in place", input.display());
    }
    Ok(())
}

/// Writes to `path`, or to stdout when absent. Content is newline-terminated.
pub fn emit(path: Option<&PathBuf>, content: &str) -> Result<()> {
    let mut content = content.to_string();
    if !content.is_empty() && !content.ends_with('\n') {
        content.push('\n');
    }
    match path {
        Some(p) => toolprune_core::dataset::write_text(p, &content).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
