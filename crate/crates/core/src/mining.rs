//! Mining (bug SQL, correct SQL) pairs from editor event logs.
//!
//! Events are grouped by `(session_id, script_id)` and each group is cut
//! into windows wherever two consecutive events are more than
//! `session_gap_ms` apart. Inside a window every `execute_error` event `E`
//! yields at most one pair:
//!
//! * **execute-success rule**: the first later `execute_success` within
//!   `max_pair_window_ms` of `E` is the fix. Errors and saves in between are
//!   skipped, so a run of errors all pair with the same success.
//! * **last-save rule**: if no execution of any kind follows `E` in the
//!   window, the last `save_code` within `max_pair_window_ms` of `E` is the
//!   fix.
//!
//! Pairs whose two sides are identical after trailing-whitespace
//! normalization are dropped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map};

use crate::model::{BugFixPair, EventKind, PairSource, SqlEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub session_gap_ms: i64,
    pub max_pair_window_ms: i64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            session_gap_ms: 30 * 60 * 1000,
            max_pair_window_ms: 2 * 60 * 60 * 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiningError {
    #[error("mining windows must be positive (session_gap_ms={session_gap_ms}, max_pair_window_ms={max_pair_window_ms})")]
    InvalidConfig {
        session_gap_ms: i64,
        max_pair_window_ms: i64,
    },
    #[error("events are not sorted by (session_id, script_id, ts_ms): event {index} precedes event {previous}")]
    Unsorted { index: usize, previous: usize },
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        if self.session_gap_ms <= 0 || self.max_pair_window_ms <= 0 {
            return Err(MiningError::InvalidConfig {
                session_gap_ms: self.session_gap_ms,
                max_pair_window_ms: self.max_pair_window_ms,
            });
        }
        Ok(())
    }
}

/// Which rule produced a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningRule {
    ExecuteSuccess,
    LastSave,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningOutput {
    pub pairs: Vec<BugFixPair>,
    /// Events skipped because they violate the event invariants.
    pub malformed: usize,
}

fn check_sorted(events: &[SqlEvent]) -> Result<(), MiningError> {
    fn key(e: &SqlEvent) -> (&str, &str, i64) {
        (&e.session_id, &e.script_id, e.timestamp_ms)
    }
    for (i, w) in events.windows(2).enumerate() {
        if key(&w[1]) < key(&w[0]) {
            return Err(MiningError::Unsorted {
                index: i + 1,
                previous: i,
            });
        }
    }
    Ok(())
}

pub fn mine_pairs(events: &[SqlEvent], cfg: &MiningConfig) -> Result<MiningOutput, MiningError> {
    cfg.validate()?;
    check_sorted(events)?;

    let valid: Vec<&SqlEvent> = events.iter().filter(|e| e.validate().is_ok()).collect();
    let malformed = events.len() - valid.len();

    let groups: Vec<&[&SqlEvent]> = valid
        .chunk_by(|a, b| a.session_id == b.session_id && a.script_id == b.script_id)
        .collect();
    let mut mined: Vec<(i64, Vec<BugFixPair>)> = groups
        .par_iter()
        .map(|g| {
            let pairs = g
                .chunk_by(|a, b| b.timestamp_ms - a.timestamp_ms <= cfg.session_gap_ms)
                .flat_map(|window| mine_window(window, cfg))
                .collect();
            (g[0].timestamp_ms, pairs)
        })
        .collect();
    // Groups arrive sorted by (session, script); a stable sort on the first
    // timestamp keeps that as the tie-break.
    mined.sort_by_key(|(ts, _)| *ts);

    Ok(MiningOutput {
        pairs: mined.into_iter().flat_map(|(_, p)| p).collect(),
        malformed,
    })
}

fn mine_window(window: &[&SqlEvent], cfg: &MiningConfig) -> Vec<BugFixPair> {
    let mut out = Vec::new();
    for (i, err) in window.iter().enumerate() {
        if err.kind != EventKind::ExecuteError {
            continue;
        }
        let within = |e: &&&SqlEvent| e.timestamp_ms - err.timestamp_ms <= cfg.max_pair_window_ms;
        let later = &window[i + 1..];
        let fix = match later.iter().find(|e| e.kind == EventKind::ExecuteSuccess) {
            Some(success) => Some(success)
                .filter(within)
                .map(|e| (*e, MiningRule::ExecuteSuccess)),
            None if later.iter().any(|e| e.kind.is_execute()) => None,
            None => later
                .iter()
                .rev()
                .filter(within)
                .find(|e| e.kind == EventKind::SaveCode)
                .map(|e| (*e, MiningRule::LastSave)),
        };
        let Some((fix, rule)) = fix else { continue };
        let mut provenance = Map::new();
        provenance.insert("session_id".into(), json!(err.session_id));
        provenance.insert("script_id".into(), json!(err.script_id));
        provenance.insert("error_ts_ms".into(), json!(err.timestamp_ms));
        provenance.insert("fix_ts_ms".into(), json!(fix.timestamp_ms));
        provenance.insert("rule".into(), json!(rule));
        let pair = BugFixPair {
            schema_ddl: Vec::new(),
            bug_sql: err.sql_text.clone(),
            error_message: err.error_message.clone().unwrap_or_default(),
            correct_sql: fix.sql_text.clone(),
            source: PairSource::DiverseCollected,
            category: None,
            provenance,
        };
        if pair.validate().is_ok() {
            out.push(pair);
        }
    }
    out
}
