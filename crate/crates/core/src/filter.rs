//! Execution filter, diff-size filter and deduplication of candidate pairs.
//!
//! Checks run in a fixed order and the first failing check names the
//! rejection reason: duplicate, executor unavailable (only when an executor
//! is required), bug SQL runs, correct SQL fails, diff too large.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmsft::compute_line_diff;
use crate::executor::{ExecutionVerdict, Executor};
use crate::model::BugFixPair;

/// Scripts with at most this many lines skip the diff-ratio check.
pub const RATIO_EXEMPT_MAX_LINES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub max_diff_ratio: f64,
    pub require_executor: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_diff_ratio: 0.5,
            require_executor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("max_diff_ratio must be in (0, 1], got {0}")]
pub struct InvalidFilterConfig(pub f64);

impl FilterConfig {
    pub fn validate(&self) -> Result<(), InvalidFilterConfig> {
        if self.max_diff_ratio > 0.0 && self.max_diff_ratio <= 1.0 {
            Ok(())
        } else {
            Err(InvalidFilterConfig(self.max_diff_ratio))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    BugRuns,
    CorrectFails,
    DiffTooLarge,
    Duplicate,
    ExecutorUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedPair {
    pub reason: RejectReason,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    pub pair: BugFixPair,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutput {
    pub kept: Vec<BugFixPair>,
    pub rejected: Vec<RejectedPair>,
}

/// Whether the correct side's diff is small enough to keep.
pub fn diff_within_ratio(bug_sql: &str, correct_sql: &str, max_diff_ratio: f64) -> bool {
    let diff = compute_line_diff(bug_sql, correct_sql);
    diff.len() <= RATIO_EXEMPT_MAX_LINES || diff.diff_ratio() <= max_diff_ratio
}

/// Execution and diff checks for one pair; `None` means keep.
pub fn check_pair(
    pair: &BugFixPair,
    cfg: &FilterConfig,
    executor: &dyn Executor,
) -> Option<(RejectReason, String)> {
    let bug = executor.validate(&pair.bug_sql);
    let correct = executor.validate(&pair.correct_sql);
    if cfg.require_executor {
        for v in [&bug, &correct] {
            if let ExecutionVerdict::Unavailable(why) = v {
                return Some((RejectReason::ExecutorUnavailable, why.clone()));
            }
        }
    }
    if bug == ExecutionVerdict::Succeeds {
        return Some((RejectReason::BugRuns, String::new()));
    }
    if let ExecutionVerdict::Fails(msg) = correct {
        return Some((RejectReason::CorrectFails, msg));
    }
    if !diff_within_ratio(&pair.bug_sql, &pair.correct_sql, cfg.max_diff_ratio) {
        let diff = compute_line_diff(&pair.bug_sql, &pair.correct_sql);
        return Some((
            RejectReason::DiffTooLarge,
            format!("{} of {} lines differ", diff.diff_line_count(), diff.len()),
        ));
    }
    None
}

/// Filters `pairs`, preserving input order in both outputs. Executor calls
/// run on the current rayon pool.
pub fn filter_pairs(
    pairs: Vec<BugFixPair>,
    cfg: &FilterConfig,
    executor: &dyn Executor,
) -> FilterOutput {
    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = pairs
        .iter()
        .map(|p| !seen.insert((p.bug_sql.as_str(), p.correct_sql.as_str())))
        .collect();
    let verdicts: Vec<Option<(RejectReason, String)>> = pairs
        .par_iter()
        .zip(duplicate.par_iter())
        .map(|(p, &dup)| {
            if dup {
                Some((RejectReason::Duplicate, String::new()))
            } else {
                check_pair(p, cfg, executor)
            }
        })
        .collect();

    let mut out = FilterOutput::default();
    for (pair, verdict) in pairs.into_iter().zip(verdicts) {
        match verdict {
            None => out.kept.push(pair),
            Some((reason, detail)) => out.rejected.push(RejectedPair {
                reason,
                detail,
                pair,
            }),
        }
    }
    out
}
