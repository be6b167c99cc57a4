//! The `<query>` / `<tool_output>` prompt shared by the LLM pruner, SFT export
//! and zero-shot baselines.

use crate::text::{render_numbered, Query, ToolObservation};

/// Bump together with the asset file name when the preamble text changes.
pub const PROMPT_VERSION: &str = "v1";
pub const PROMPT_PREAMBLE: &str = include_str!("../../assets/prune_prompt_v1.txt");

pub fn build_prompt(query: &Query, obs: &ToolObservation) -> String {
    format!(
        "{}\n\n<query>\n{}\n</query>\n<tool_output>\n{}\n</tool_output>",
        PROMPT_PREAMBLE.trim_end(),
        query.as_str(),
        render_numbered(obs)
    )
}
