//! Pruning through a chat-completion model.

use std::sync::Arc;

use crate::chat::{ChatClient, ChatRequest};
use crate::output::{parse_model_output, Prediction};
use crate::pruners::prompt::build_prompt;
use crate::pruners::{PruneError, PruneInput, Pruner};
use crate::text::{Query, ToolObservation};

/// Sends the prompt as one user message at temperature 0 and aligns the reply.
pub fn llm_prune(query: &Query, obs: &ToolObservation, client: &dyn ChatClient) -> Result<Prediction, PruneError> {
    let request = ChatRequest::single_user(build_prompt(query, obs), 0.0);
    let reply = client.complete(&request)?;
    Ok(parse_model_output(&reply, obs))
}

pub struct LlmPruner {
    client: Arc<dyn ChatClient>,
    label: String,
}

impl LlmPruner {
    pub fn new(client: Arc<dyn ChatClient>, label: impl Into<String>) -> Self {
        Self {
            client,
            label: label.into(),
        }
    }
}

impl Pruner for LlmPruner {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn prune(&self, input: PruneInput<'_>) -> Result<Prediction, PruneError> {
        llm_prune(input.query, input.observation, self.client.as_ref())
    }
}
