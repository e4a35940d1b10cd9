//! HTTP client for the bug-generation LLM.
//!
//! The endpoint takes `POST {"model": .., "prompt": ..}` and answers
//! `{"text": ..}`. Transport failures, HTTP 429 and 5xx responses are
//! retried with exponential backoff.

use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::http::{HttpError, JsonClient};

/// Anything that turns a prompt into text.
pub trait TextGenerator: Sync {
    fn generate(&self, prompt: &str) -> Result<String, LlmError>;

    /// Identifier recorded in pair provenance.
    fn model_id(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("LLM endpoint unavailable after {attempts} attempt(s): {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("LLM request rejected: {0}")]
    Rejected(String),
}

#[derive(Debug, thiserror::Error)]
pub enum EndpointConfigError {
    #[error("cannot read endpoint config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid endpoint config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Retries after the first attempt.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

fn default_in_flight() -> usize {
    4
}

impl EndpointConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, EndpointConfigError> {
        let cfg: EndpointConfig =
            toml::from_str(text).map_err(|e| EndpointConfigError::Invalid(e.to_string()))?;
        if cfg.max_in_flight == 0 {
            return Err(EndpointConfigError::Invalid(
                "max_in_flight must be at least 1".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EndpointConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| EndpointConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

#[derive(Debug, Clone)]
pub struct LlmClient {
    cfg: EndpointConfig,
    token: Option<String>,
    client: JsonClient,
}

impl LlmClient {
    /// Reads the bearer token from the configured environment variable; an
    /// unset variable is an error so a misconfigured run fails fast.
    pub fn new(cfg: EndpointConfig) -> Result<Self, EndpointConfigError> {
        let token = match &cfg.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                EndpointConfigError::Invalid(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = JsonClient::new(Duration::from_secs(cfg.timeout_secs));
        Ok(LlmClient { cfg, token, client })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }
}

impl TextGenerator for LlmClient {
    fn generate(&self, prompt: &str) -> Result<String, LlmError> {
        let body = CompletionRequest {
            model: &self.cfg.model,
            prompt,
        };
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.client.post::<_, CompletionResponse>(
                &self.cfg.url,
                &body,
                self.token.as_deref(),
            ) {
                Ok(r) => return Ok(r.text),
                Err(e) if e.is_transient() && attempt <= self.cfg.max_retries => {
                    let wait = self
                        .cfg
                        .backoff_ms
                        .saturating_mul(1 << (attempt - 1).min(16));
                    thread::sleep(Duration::from_millis(wait));
                }
                Err(e @ (HttpError::Transport(_) | HttpError::Status(_))) if e.is_transient() => {
                    return Err(LlmError::Unavailable {
                        attempts: attempt,
                        last: e.to_string(),
                    })
                }
                Err(e) => return Err(LlmError::Rejected(e.to_string())),
            }
        }
    }

    fn model_id(&self) -> &str {
        &self.cfg.model
    }
}
