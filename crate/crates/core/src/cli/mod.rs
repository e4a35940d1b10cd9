pub mod args;
mod commands;

use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use sqlfix_core::executor::{Executor, RemoteExecutor, SyntaxExecutor};
use sqlfix_core::filter::FilterConfig;
use sqlfix_core::mining::MiningConfig;
use sqlfix_core::sql::Dialect;

pub use commands::run;

/// Process exit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Gate,
    Remote,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Gate => 3,
            Kind::Remote => 4,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Kind::Usage => "usage_error",
            Kind::Data => "data_error",
            Kind::Gate => "gate_failed",
            Kind::Remote => "remote_unavailable",
        }
    }
}

/// An error with a known exit class. Other errors exit as data errors.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(kind: Kind, message: impl Into<String>) -> anyhow::Error {
    Failure {
        kind,
        message: message.into(),
    }
    .into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mine: MiningConfig,
    pub filter: FilterConfig,
    pub executor: ExecutorSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorSection {
    pub url: Option<String>,
    pub timeout_secs: u64,
}

impl Default for ExecutorSection {
    fn default() -> Self {
        ExecutorSection {
            url: None,
            timeout_secs: sqlfix_core::executor::DEFAULT_REMOTE_TIMEOUT.as_secs(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            fail(
                Kind::Usage,
                format!("cannot read config {}: {e}", path.display()),
            )
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            fail(
                Kind::Usage,
                format!("invalid config {}: {e}", path.display()),
            )
        })?;
        cfg.mine
            .validate()
            .map_err(|e| fail(Kind::Usage, e.to_string()))?;
        cfg.filter
            .validate()
            .map_err(|e| fail(Kind::Usage, e.to_string()))?;
        Ok(cfg)
    }

    pub fn executor(&self, url_override: Option<&str>, dialect: Dialect) -> Box<dyn Executor> {
        match url_override.or(self.executor.url.as_deref()) {
            Some(url) => Box::new(RemoteExecutor::new(
                url,
                dialect,
                Duration::from_secs(self.executor.timeout_secs),
            )),
            None => Box::new(SyntaxExecutor::new(dialect)),
        }
    }
}
