//! Minimal client for OpenAI-compatible chat-completion endpoints.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("api key variable {0} is not set")]
    MissingApiKey(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<ChatError> },
}

impl ChatError {
    fn is_retryable(&self) -> bool {
        match self {
            ChatError::Transport(_) => true,
            ChatError::Status { status, .. } => *status >= 500 || *status == 429,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn single_user(prompt: impl Into<String>, temperature: f64) -> Self {
        Self {
            messages: vec![ChatMessage::user(prompt)],
            temperature,
        }
    }
}

/// Anything that can turn a chat request into the assistant's text.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Base URL (`.../v1`) or the full `.../chat/completions` URL.
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub request_timeout: Duration,
    pub max_retries: u32,
    /// First backoff delay; doubles after each failed attempt.
    pub backoff_base: Duration,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key_env: None,
            request_timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
        }
    }

    pub fn completions_url(&self) -> String {
        let trimmed = self.url.trim_end_matches('/');
        if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        }
    }
}

/// Blocking HTTP client with exponential backoff on transport errors, 429
/// and 5xx responses.
pub struct HttpChatClient {
    agent: ureq::Agent,
    config: EndpointConfig,
    api_key: Option<String>,
}

impl HttpChatClient {
    pub fn new(config: EndpointConfig) -> Result<Self, ChatError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ChatError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            config,
            api_key,
        })
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        let mut req = self.agent.post(self.config.completions_url());
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = req
            .send_json(&body)
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ChatError::Status { status, body: text });
        }
        extract_content(&text)
    }
}

/// Reads `choices[0].message.content`; a null content is an empty answer.
pub fn extract_content(body: &str) -> Result<String, ChatError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ChatError::Decode(e.to_string()))?;
    let message = value
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or_else(|| ChatError::Decode("missing choices[0].message".into()))?;
    match message.get("content") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Ok(String::new()),
        Some(other) => Err(ChatError::Decode(format!("unexpected content: {other}"))),
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let attempts = self.config.max_retries + 1;
        let mut delay = self.config.backoff_base;
        let mut attempt = 1;
        loop {
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(err) if err.is_retryable() && attempt < attempts => {
                    log::warn!("chat request failed (attempt {attempt}/{attempts}): {err}");
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                    attempt += 1;
                }
                Err(err) if err.is_retryable() => {
                    return Err(ChatError::Exhausted {
                        attempts,
                        last: Box::new(err),
                    })
                }
                Err(err) => return Err(err),
            }
        }
    }
}
