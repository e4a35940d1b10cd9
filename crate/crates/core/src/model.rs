//! Shared domain types.
//!
//! Everything here is a plain value type: no I/O, no interior mutability.
//! Types whose invariants cannot be expressed in the field types alone
//! (`CategoryPath`, `LineDiff`, `MaskPlan`) are validated on construction
//! and on deserialization.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Kind of a user action recorded by the SQL editor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ExecuteError,
    ExecuteSuccess,
    SaveCode,
}

impl EventKind {
    pub fn is_execute(self) -> bool {
        matches!(self, EventKind::ExecuteError | EventKind::ExecuteSuccess)
    }
}

/// One timestamped editor action.
///
/// Deserialization accepts any shape that matches the field types; use
/// [`SqlEvent::validate`] to check the kind/message invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlEvent {
    pub session_id: String,
    pub script_id: String,
    #[serde(rename = "ts_ms")]
    pub timestamp_ms: i64,
    pub kind: EventKind,
    #[serde(rename = "sql")]
    pub sql_text: String,
    #[serde(rename = "error", default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
}

/// Why an event was rejected as malformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EventDefect {
    #[error("event has empty sql text")]
    EmptySql,
    #[error("execute_error event without an error message")]
    MissingErrorMessage,
    #[error("error message on a non-error event")]
    UnexpectedErrorMessage,
}

impl SqlEvent {
    pub fn validate(&self) -> Result<(), EventDefect> {
        if self.sql_text.trim().is_empty() {
            return Err(EventDefect::EmptySql);
        }
        let has_message = self
            .error_message
            .as_deref()
            .is_some_and(|m| !m.trim().is_empty());
        match (self.kind, has_message) {
            (EventKind::ExecuteError, false) => Err(EventDefect::MissingErrorMessage),
            (EventKind::ExecuteError, true) => Ok(()),
            (_, true) => Err(EventDefect::UnexpectedErrorMessage),
            (_, false) => Ok(()),
        }
    }
}

/// Where a pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    DiverseCollected,
    OrientedGenerated,
}

/// A three-level bug category. The reserved all-`unclassified` path is the
/// result of a classification with no matching rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CategoryPathRepr")]
pub struct CategoryPath {
    level1: String,
    level2: String,
    level3: String,
}

#[derive(Deserialize)]
struct CategoryPathRepr {
    level1: String,
    level2: String,
    level3: String,
}

impl TryFrom<CategoryPathRepr> for CategoryPath {
    type Error = CategoryPathError;

    fn try_from(r: CategoryPathRepr) -> Result<Self, Self::Error> {
        CategoryPath::new(r.level1, r.level2, r.level3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("category path levels must be non-empty")]
pub struct CategoryPathError;

pub const UNCLASSIFIED: &str = "unclassified";

impl CategoryPath {
    pub fn new(
        level1: impl Into<String>,
        level2: impl Into<String>,
        level3: impl Into<String>,
    ) -> Result<Self, CategoryPathError> {
        let path = CategoryPath {
            level1: level1.into(),
            level2: level2.into(),
            level3: level3.into(),
        };
        if [&path.level1, &path.level2, &path.level3]
            .iter()
            .any(|l| l.trim().is_empty())
        {
            return Err(CategoryPathError);
        }
        Ok(path)
    }

    pub fn unclassified() -> Self {
        CategoryPath {
            level1: UNCLASSIFIED.into(),
            level2: UNCLASSIFIED.into(),
            level3: UNCLASSIFIED.into(),
        }
    }

    pub fn is_unclassified(&self) -> bool {
        self.level1 == UNCLASSIFIED && self.level2 == UNCLASSIFIED && self.level3 == UNCLASSIFIED
    }

    pub fn level1(&self) -> &str {
        &self.level1
    }

    pub fn level2(&self) -> &str {
        &self.level2
    }

    pub fn level3(&self) -> &str {
        &self.level3
    }
}

impl fmt::Display for CategoryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {} / {}", self.level1, self.level2, self.level3)
    }
}

/// A mined or generated training pair: the bug SQL, what the engine said
/// about it, and the fixed SQL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugFixPair {
    #[serde(default)]
    pub schema_ddl: Vec<String>,
    pub bug_sql: String,
    pub error_message: String,
    pub correct_sql: String,
    pub source: PairSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<CategoryPath>,
    #[serde(default)]
    pub provenance: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairDefect {
    #[error("bug sql and correct sql are identical")]
    Identical,
    #[error("generated pair does not record its target sql in provenance")]
    MissingTarget,
}

/// Provenance key under which generated pairs store the corpus SQL they were
/// derived from.
pub const PROVENANCE_TARGET_SQL: &str = "target_sql";

impl BugFixPair {
    pub fn validate(&self) -> Result<(), PairDefect> {
        if normalize_trailing_whitespace(&self.bug_sql)
            == normalize_trailing_whitespace(&self.correct_sql)
        {
            return Err(PairDefect::Identical);
        }
        if self.source == PairSource::OrientedGenerated
            && !self
                .provenance
                .get(PROVENANCE_TARGET_SQL)
                .is_some_and(Value::is_string)
        {
            return Err(PairDefect::MissingTarget);
        }
        Ok(())
    }
}

/// Strips trailing whitespace from every line and drops trailing blank lines.
pub fn normalize_trailing_whitespace(sql: &str) -> String {
    let mut out = split_lines(sql)
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n");
    let kept = out.trim_end().len();
    out.truncate(kept);
    out
}

/// Iterates the lines of `text` without their `\n` terminators. A sole
/// trailing newline does not produce an empty final line.
pub fn split_lines(text: &str) -> impl Iterator<Item = &str> {
    text.split_inclusive('\n')
        .map(|l| l.strip_suffix('\n').unwrap_or(l))
}

/// Byte ranges of each line of `text`, terminators included, so that the
/// ranges partition the text.
pub fn line_byte_ranges(text: &str) -> Vec<Range<usize>> {
    let mut start = 0;
    text.split_inclusive('\n')
        .map(|l| {
            let r = start..start + l.len();
            start = r.end;
            r
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineClass {
    Consistent,
    Diff,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub index: usize,
    pub text: String,
    pub class: LineClass,
}

/// Line-level classification of a correct SQL against its bug SQL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LineDiffRepr")]
pub struct LineDiff {
    correct_lines: Vec<DiffLine>,
    bug_line_count: usize,
    diff_line_count: usize,
}

#[derive(Deserialize)]
struct LineDiffRepr {
    correct_lines: Vec<DiffLine>,
    bug_line_count: usize,
    diff_line_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LineDiffError {
    #[error("line {found} appears where line {expected} was expected")]
    OutOfOrder { expected: usize, found: usize },
    #[error("diff_line_count {stated} disagrees with {actual} diff lines")]
    CountMismatch { stated: usize, actual: usize },
}

impl TryFrom<LineDiffRepr> for LineDiff {
    type Error = LineDiffError;

    fn try_from(r: LineDiffRepr) -> Result<Self, Self::Error> {
        let diff = LineDiff::from_lines(r.correct_lines, r.bug_line_count)?;
        if diff.diff_line_count != r.diff_line_count {
            return Err(LineDiffError::CountMismatch {
                stated: r.diff_line_count,
                actual: diff.diff_line_count,
            });
        }
        Ok(diff)
    }
}

impl LineDiff {
    /// Builds a diff from already-classified lines, checking that indices run
    /// `0..n` in order.
    pub fn from_lines(
        correct_lines: Vec<DiffLine>,
        bug_line_count: usize,
    ) -> Result<Self, LineDiffError> {
        for (expected, line) in correct_lines.iter().enumerate() {
            if line.index != expected {
                return Err(LineDiffError::OutOfOrder {
                    expected,
                    found: line.index,
                });
            }
        }
        let diff_line_count = correct_lines
            .iter()
            .filter(|l| l.class == LineClass::Diff)
            .count();
        Ok(LineDiff {
            correct_lines,
            bug_line_count,
            diff_line_count,
        })
    }

    pub fn lines(&self) -> &[DiffLine] {
        &self.correct_lines
    }

    pub fn len(&self) -> usize {
        self.correct_lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correct_lines.is_empty()
    }

    pub fn bug_line_count(&self) -> usize {
        self.bug_line_count
    }

    pub fn diff_line_count(&self) -> usize {
        self.diff_line_count
    }

    pub fn consistent_line_count(&self) -> usize {
        self.correct_lines.len() - self.diff_line_count
    }

    pub fn classes(&self) -> impl Iterator<Item = LineClass> + '_ {
        self.correct_lines.iter().map(|l| l.class)
    }

    /// Fraction of correct lines that are diff lines; zero for an empty diff.
    pub fn diff_ratio(&self) -> f64 {
        if self.correct_lines.is_empty() {
            0.0
        } else {
            self.diff_line_count as f64 / self.correct_lines.len() as f64
        }
    }
}

/// Loss weight of one line: 0 drops the line from the loss, 1 keeps it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineWeight {
    pub line_index: usize,
    pub weight: u8,
}

/// One realization of the dynamic line mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub p: f64,
    pub seed: u64,
    pub line_mask: Vec<LineWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_weights: Option<Vec<u8>>,
}

impl MaskPlan {
    pub fn weight_of_line(&self, line_index: usize) -> Option<u8> {
        self.line_mask.get(line_index).map(|w| w.weight)
    }

    pub fn masked_line_count(&self) -> usize {
        self.line_mask.iter().filter(|w| w.weight == 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
    pub class: LineClass,
}

/// Parameters of the single mask realization behind baked token weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BakedMask {
    pub p: f64,
    pub seed: u64,
}

/// A rendered fine-tuning sample. `line_spans` lets a trainer re-sample the
/// line mask on every epoch; `baked_token_weights` is only set for consumers
/// that need one fixed realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub input_text: String,
    pub target_text: String,
    pub line_spans: Vec<LineSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baked_token_weights: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baked_mask: Option<BakedMask>,
}

impl TrainingSample {
    /// Checks that `line_spans` partition `target_text` in order.
    pub fn spans_partition_target(&self) -> bool {
        let mut cursor = 0;
        for span in &self.line_spans {
            if span.start != cursor || span.end <= span.start {
                return false;
            }
            cursor = span.end;
        }
        cursor == self.target_text.len()
    }
}

/// Masked loss of one target sequence, split by line class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Weighted loss over consistent-line tokens.
    pub l1: f64,
    /// Loss over diff-line tokens.
    pub l2: f64,
    pub total: f64,
    pub unmasked_token_count: usize,
    pub per_token: f64,
}
