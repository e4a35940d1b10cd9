//! Execution backends deciding whether a SQL statement runs.
//!
//! [`SyntaxExecutor`] needs no warehouse: a statement "runs" when it parses
//! under the selected dialect. [`RemoteExecutor`] delegates to a service
//! speaking `POST {sql, dialect} -> {ok, message}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::http::JsonClient;
use crate::sql::{self, Dialect};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "message", rename_all = "snake_case")]
pub enum ExecutionVerdict {
    Fails(String),
    Succeeds,
    /// The backend could not be reached or answered nonsense.
    Unavailable(String),
}

impl ExecutionVerdict {
    pub fn is_fails(&self) -> bool {
        matches!(self, ExecutionVerdict::Fails(_))
    }

    pub fn is_unavailable(&self) -> bool {
        matches!(self, ExecutionVerdict::Unavailable(_))
    }
}

pub trait Executor: Sync {
    fn validate(&self, sql: &str) -> ExecutionVerdict;
}

impl<E: Executor + ?Sized> Executor for &E {
    fn validate(&self, sql: &str) -> ExecutionVerdict {
        (**self).validate(sql)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SyntaxExecutor {
    pub dialect: Dialect,
}

impl SyntaxExecutor {
    pub fn new(dialect: Dialect) -> Self {
        SyntaxExecutor { dialect }
    }
}

impl Executor for SyntaxExecutor {
    fn validate(&self, sql: &str) -> ExecutionVerdict {
        match sql::parse(sql, self.dialect) {
            Ok(stmts) if stmts.is_empty() => ExecutionVerdict::Fails("no statement".into()),
            Ok(_) => ExecutionVerdict::Succeeds,
            Err(e) => ExecutionVerdict::Fails(e.message),
        }
    }
}

pub const DEFAULT_REMOTE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct RemoteExecutor {
    url: String,
    dialect: Dialect,
    client: JsonClient,
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    sql: &'a str,
    dialect: Dialect,
}

#[derive(Deserialize)]
struct RemoteResponse {
    ok: bool,
    #[serde(default)]
    message: String,
}

impl RemoteExecutor {
    pub fn new(url: impl Into<String>, dialect: Dialect, timeout: Duration) -> Self {
        RemoteExecutor {
            url: url.into(),
            dialect,
            client: JsonClient::new(timeout),
        }
    }
}

impl Executor for RemoteExecutor {
    fn validate(&self, sql: &str) -> ExecutionVerdict {
        let body = RemoteRequest {
            sql,
            dialect: self.dialect,
        };
        match self
            .client
            .post::<_, RemoteResponse>(&self.url, &body, None)
        {
            Ok(r) if r.ok => ExecutionVerdict::Succeeds,
            Ok(r) => ExecutionVerdict::Fails(r.message),
            Err(e) => ExecutionVerdict::Unavailable(e.to_string()),
        }
    }
}
