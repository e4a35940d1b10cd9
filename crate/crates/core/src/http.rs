//! Minimal blocking JSON-over-HTTP client shared by the remote executor and
//! the LLM endpoint.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HttpError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response body: {0}")]
    Body(String),
}

impl HttpError {
    /// Failures worth retrying: the server was unreachable, overloaded or
    /// failed internally.
    pub fn is_transient(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status(code) => *code == 429 || *code >= 500,
            HttpError::Body(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: Agent,
}

impl JsonClient {
    pub fn new(timeout: Duration) -> Self {
        let agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        JsonClient { agent }
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        url: &str,
        body: &Req,
        bearer: Option<&str>,
    ) -> Result<Resp, HttpError> {
        let mut req = self.agent.post(url);
        if let Some(token) = bearer {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| HttpError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(HttpError::Status(status));
        }
        resp.body_mut()
            .read_json::<Resp>()
            .map_err(|e| HttpError::Body(e.to_string()))
    }
}
