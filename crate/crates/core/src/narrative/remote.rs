//! Chat-completion client: POSTs `{model, messages}` and reads
//! `choices[0].message.content`.

use std::thread::sleep;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{LlmBackendConfig, NarrativeError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Anything that turns a conversation into a reply.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, NarrativeError>;
}

pub struct ChatCompletionClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    max_retries: u32,
    backoff: Duration,
    http: reqwest::blocking::Client,
}

impl ChatCompletionClient {
    pub fn new(cfg: &LlmBackendConfig) -> Result<Self, NarrativeError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| NarrativeError::Config("remote mode needs an endpoint".into()))?;
        let model = cfg
            .model
            .clone()
            .ok_or_else(|| NarrativeError::Config("remote mode needs a model".into()))?;
        let api_key = cfg
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok());
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| NarrativeError::Config(e.to_string()))?;
        Ok(ChatCompletionClient {
            endpoint,
            model,
            api_key,
            max_retries: cfg.max_retries,
            backoff: Duration::from_millis(cfg.backoff_ms),
            http,
        })
    }

    fn attempt(&self, messages: &[ChatMessage]) -> Result<String, Attempt> {
        let mut req = self
            .http
            .post(&self.endpoint)
            .json(&json!({ "model": self.model, "messages": messages }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!("HTTP {status}")));
        }
        let body: serde_json::Value = resp.json().map_err(|e| Attempt::Fatal(e.to_string()))?;
        body.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fatal("response lacks choices[0].message.content".into()))
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl ChatBackend for ChatCompletionClient {
    /// Retries network failures, 429 and 5xx responses with exponential
    /// backoff, then gives up with `BackendUnavailable`.
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, NarrativeError> {
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(messages) {
                Ok(text) => return Ok(text),
                Err(Attempt::Retry(e)) => last = e,
                Err(Attempt::Fatal(e)) => return Err(NarrativeError::BackendUnavailable(e)),
            }
        }
        Err(NarrativeError::BackendUnavailable(format!(
            "gave up after {} attempts: {last}",
            self.max_retries + 1
        )))
    }
}
