//! Targeted bug generation: recall corpus SQL that exhibits an error
//! feature, ask an LLM to inject a bug of that category, then parse and
//! validate what comes back.

mod llm;

use std::collections::BTreeMap;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub use llm::{EndpointConfig, EndpointConfigError, LlmClient, LlmError, TextGenerator};

use crate::dmsft::{compute_line_diff, line_matches};
use crate::executor::{ExecutionVerdict, Executor};
use crate::filter::{diff_within_ratio, FilterConfig};
use crate::model::{split_lines, BugFixPair, CategoryPath, PairSource, PROVENANCE_TARGET_SQL};
use crate::prompt::{render_bug_generation_prompt, GenExample};

/// A corpus entry available for recall.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub sql: String,
    #[serde(default)]
    pub schema_ddl: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    /// Every keyword must occur, ignoring case and collapsing whitespace.
    Keyword(Vec<String>),
    Regex(String),
    /// A named predicate from a [`PluginRegistry`].
    Custom(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorFeature {
    pub category: CategoryPath,
    pub matcher: Matcher,
    /// Operator-written description of the error type, used in the prompt.
    pub description: String,
    pub limit: usize,
    pub example: Option<GenExample>,
}

impl ErrorFeature {
    /// The ERROR INFO text of the generation prompt.
    pub fn error_info(&self) -> String {
        format!("{}: {}", self.category, self.description)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot read features file {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid features file: {0}")]
    Syntax(String),
    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesFile {
    #[serde(default, rename = "feature")]
    features: Vec<FeatureSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureSpec {
    category: Vec<String>,
    description: String,
    #[serde(default)]
    keywords: Option<Vec<String>>,
    #[serde(default)]
    regex: Option<String>,
    #[serde(default)]
    plugin: Option<String>,
    #[serde(default = "default_limit")]
    limit: usize,
    #[serde(default)]
    example: Option<GenExample>,
}

fn default_limit() -> usize {
    50
}

/// Parses a features file:
///
/// ```toml
/// [[feature]]
/// category = ["Semantic", "Aggregation", "GroupByMisuse"]
/// description = "a selected column is neither aggregated nor grouped"
/// keywords = ["group by"]          # or: regex = "..." or plugin = "join"
/// limit = 20
/// ```
pub fn parse_features(
    text: &str,
    plugins: &PluginRegistry,
) -> Result<Vec<ErrorFeature>, FeatureError> {
    let file: FeaturesFile =
        toml::from_str(text).map_err(|e| FeatureError::Syntax(e.to_string()))?;
    file.features
        .into_iter()
        .enumerate()
        .map(|(index, spec)| {
            let err = |message: String| FeatureError::Feature { index, message };
            let [l1, l2, l3] = <[String; 3]>::try_from(spec.category)
                .map_err(|c| err(format!("category must have 3 levels, got {}", c.len())))?;
            let category = CategoryPath::new(l1, l2, l3).map_err(|e| err(e.to_string()))?;
            let matcher = match (spec.keywords, spec.regex, spec.plugin) {
                (Some(k), None, None) => Matcher::Keyword(k),
                (None, Some(r), None) => Matcher::Regex(r),
                (None, None, Some(p)) => Matcher::Custom(p),
                _ => {
                    return Err(err(
                        "exactly one of keywords, regex, plugin is required".into()
                    ))
                }
            };
            let feature = ErrorFeature {
                category,
                matcher,
                description: spec.description,
                limit: spec.limit,
                example: spec.example,
            };
            CompiledMatcher::new(&feature.matcher, plugins).map_err(err)?;
            Ok(feature)
        })
        .collect()
}

pub fn load_features(
    path: &Path,
    plugins: &PluginRegistry,
) -> Result<Vec<ErrorFeature>, FeatureError> {
    let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_features(&text, plugins)
}

type Predicate = Box<dyn Fn(&str) -> bool + Send + Sync>;

/// Named SQL predicates usable as `Custom` matchers.
pub struct PluginRegistry {
    plugins: BTreeMap<String, Predicate>,
}

fn word_regex(pattern: &str) -> Regex {
    RegexBuilder::new(pattern)
        .case_insensitive(true)
        .build()
        .expect("built-in pattern compiles")
}

impl PluginRegistry {
    pub fn empty() -> Self {
        PluginRegistry {
            plugins: BTreeMap::new(),
        }
    }

    /// Registry with the built-in predicates `group_by_aggregate`, `join`,
    /// `window_function` and `subquery`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let group_by = word_regex(r"\bgroup\s+by\b");
        let aggregate = word_regex(r"\b(count|sum|avg|min|max)\s*\(");
        r.register("group_by_aggregate", move |sql| {
            group_by.is_match(sql) && aggregate.is_match(sql)
        });
        let join = word_regex(r"\bjoin\b");
        r.register("join", move |sql| join.is_match(sql));
        let over = word_regex(r"\bover\s*\(");
        r.register("window_function", move |sql| over.is_match(sql));
        let sub = word_regex(r"\(\s*select\b");
        r.register("subquery", move |sql| sub.is_match(sql));
        r
    }

    pub fn register(&mut self, name: &str, f: impl Fn(&str) -> bool + Send + Sync + 'static) {
        self.plugins.insert(name.to_owned(), Box::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&Predicate> {
        self.plugins.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.plugins.keys().map(String::as_str)
    }
}

fn collapse_lower(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

enum CompiledMatcher<'a> {
    Keyword(Vec<String>),
    Regex(Regex),
    Custom(&'a Predicate),
}

impl<'a> CompiledMatcher<'a> {
    fn new(m: &Matcher, plugins: &'a PluginRegistry) -> Result<Self, String> {
        match m {
            Matcher::Keyword(k) => {
                let k: Vec<String> = k.iter().map(|w| collapse_lower(w)).collect();
                if k.is_empty() || k.iter().any(String::is_empty) {
                    return Err("keywords must be non-empty".into());
                }
                Ok(CompiledMatcher::Keyword(k))
            }
            Matcher::Regex(p) => Regex::new(p)
                .map(CompiledMatcher::Regex)
                .map_err(|e| e.to_string()),
            Matcher::Custom(name) => plugins
                .get(name)
                .map(CompiledMatcher::Custom)
                .ok_or_else(|| format!("unknown plugin `{name}`")),
        }
    }

    fn is_match(&self, sql: &str) -> bool {
        match self {
            CompiledMatcher::Keyword(k) => {
                let text = collapse_lower(sql);
                k.iter().all(|w| text.contains(w.as_str()))
            }
            CompiledMatcher::Regex(r) => r.is_match(sql),
            CompiledMatcher::Custom(f) => f(sql),
        }
    }
}

/// A corpus SQL selected for bug injection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenCandidate {
    pub target_sql: String,
    #[serde(default)]
    pub schema_ddl: Vec<String>,
    pub category: CategoryPath,
    pub error_info: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<GenExample>,
}

/// The first `limit` corpus entries matching `feature`, in corpus order.
pub fn recall(
    corpus: &[CorpusEntry],
    feature: &ErrorFeature,
    limit: usize,
    plugins: &PluginRegistry,
) -> Result<Vec<GenCandidate>, String> {
    let m = CompiledMatcher::new(&feature.matcher, plugins)?;
    let error_info = feature.error_info();
    Ok(corpus
        .iter()
        .filter(|e| m.is_match(&e.sql))
        .take(limit)
        .map(|e| GenCandidate {
            target_sql: e.sql.clone(),
            schema_ddl: e.schema_ddl.clone(),
            category: feature.category.clone(),
            error_info: error_info.clone(),
            example: feature.example.clone(),
        })
        .collect())
}

pub fn build_gen_prompt(candidate: &GenCandidate) -> String {
    render_bug_generation_prompt(
        &candidate.schema_ddl,
        &candidate.target_sql,
        &candidate.error_info,
        candidate.example.as_ref(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suitable {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenResult {
    pub error_sql: String,
    pub correct_sql: String,
    pub reason: String,
    pub suitable: Suitable,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse generation response: {message}")]
pub struct ParseFailure {
    pub message: String,
    pub raw: String,
}

/// End offset (exclusive) of the balanced `{...}` starting at `start`,
/// skipping braces inside JSON strings.
fn balanced_object_end(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// The first balanced `{...}` span of `raw` that parses as a JSON object.
pub fn first_json_object(raw: &str) -> Option<Map<String, Value>> {
    raw.match_indices('{').find_map(|(start, _)| {
        let end = balanced_object_end(raw, start)?;
        match serde_json::from_str::<Value>(&raw[start..end]) {
            Ok(Value::Object(m)) => Some(m),
            _ => None,
        }
    })
}

pub fn parse_gen_response(raw: &str) -> Result<GenResult, ParseFailure> {
    let fail = |message: String| ParseFailure {
        message,
        raw: raw.to_owned(),
    };
    let obj = first_json_object(raw).ok_or_else(|| fail("no JSON object found".into()))?;
    let field = |key: &str| match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(fail(format!("`{key}` is not a string"))),
        None => Err(fail(format!("missing key `{key}`"))),
    };
    let suitable = match field("suitable")?.trim().to_ascii_lowercase().as_str() {
        "yes" => Suitable::Yes,
        "no" => Suitable::No,
        other => return Err(fail(format!("`suitable` must be yes or no, got `{other}`"))),
    };
    Ok(GenResult {
        error_sql: field("error sql")?,
        correct_sql: field("correct sql")?,
        reason: field("reason")?,
        suitable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenRejectReason {
    NotSuitable,
    NoDiff,
    ExecutorUnavailable,
    ErrorSqlRuns,
    CorrectSqlFails,
    DriftedFromTarget,
    DiffTooLarge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenRejection {
    pub reason: GenRejectReason,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

fn reject(reason: GenRejectReason, detail: impl Into<String>) -> GenRejection {
    GenRejection {
        reason,
        detail: detail.into(),
    }
}

/// Accepts a parsed generation as a training pair, or says why not. The
/// pair's error message is the executor's diagnostic for the error SQL.
pub fn validate_generated(
    result: &GenResult,
    candidate: &GenCandidate,
    executor: &dyn Executor,
    filter: &FilterConfig,
    model_id: &str,
) -> Result<BugFixPair, GenRejection> {
    use GenRejectReason::*;
    if result.suitable == Suitable::No {
        return Err(reject(NotSuitable, result.reason.clone()));
    }
    let diff = compute_line_diff(&result.error_sql, &result.correct_sql);
    if diff.diff_line_count() == 0 {
        return Err(reject(NoDiff, ""));
    }
    let bug_verdict = executor.validate(&result.error_sql);
    let fix_verdict = executor.validate(&result.correct_sql);
    if filter.require_executor {
        for v in [&bug_verdict, &fix_verdict] {
            if let ExecutionVerdict::Unavailable(why) = v {
                return Err(reject(ExecutorUnavailable, why.clone()));
            }
        }
    }
    let error_message = match bug_verdict {
        ExecutionVerdict::Fails(m) => m,
        ExecutionVerdict::Succeeds => return Err(reject(ErrorSqlRuns, "")),
        ExecutionVerdict::Unavailable(_) => String::new(),
    };
    if let ExecutionVerdict::Fails(m) = fix_verdict {
        return Err(reject(CorrectSqlFails, m));
    }
    let bug_lines: Vec<&str> = split_lines(&result.error_sql).collect();
    let fix_lines: Vec<&str> = split_lines(&result.correct_sql).collect();
    if let Some((_, j)) = line_matches(&result.error_sql, &result.correct_sql)
        .into_iter()
        .find(|&(i, j)| bug_lines[i] != fix_lines[j])
    {
        return Err(reject(
            DriftedFromTarget,
            format!("line {j} differs from its error-sql counterpart in trailing whitespace"),
        ));
    }
    if !diff_within_ratio(
        &result.error_sql,
        &result.correct_sql,
        filter.max_diff_ratio,
    ) {
        return Err(reject(
            DiffTooLarge,
            format!("{} of {} lines differ", diff.diff_line_count(), diff.len()),
        ));
    }

    let mut provenance = Map::new();
    provenance.insert(PROVENANCE_TARGET_SQL.into(), json!(candidate.target_sql));
    provenance.insert("model".into(), json!(model_id));
    provenance.insert("reason".into(), json!(result.reason));
    Ok(BugFixPair {
        schema_ddl: candidate.schema_ddl.clone(),
        bug_sql: result.error_sql.clone(),
        error_message,
        correct_sql: result.correct_sql.clone(),
        source: PairSource::OrientedGenerated,
        category: Some(candidate.category.clone()),
        provenance,
    })
}

/// What happened to one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GenOutcome {
    Accepted { pair: BugFixPair },
    Rejected { rejection: GenRejection },
    ParseFailure { message: String },
    LlmUnavailable { message: String },
    LlmRejected { message: String },
}

/// Audit trail entry for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub index: usize,
    pub category: CategoryPath,
    pub target_sql: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(flatten)]
    pub outcome: GenOutcome,
}

pub fn generate_one(
    index: usize,
    candidate: &GenCandidate,
    generator: &dyn TextGenerator,
    executor: &dyn Executor,
    filter: &FilterConfig,
) -> AuditRecord {
    let prompt = build_gen_prompt(candidate);
    let mut record = AuditRecord {
        index,
        category: candidate.category.clone(),
        target_sql: candidate.target_sql.clone(),
        prompt,
        response: None,
        outcome: GenOutcome::ParseFailure {
            message: String::new(),
        },
    };
    let raw = match generator.generate(&record.prompt) {
        Ok(raw) => raw,
        Err(e @ LlmError::Unavailable { .. }) => {
            record.outcome = GenOutcome::LlmUnavailable {
                message: e.to_string(),
            };
            return record;
        }
        Err(e) => {
            record.outcome = GenOutcome::LlmRejected {
                message: e.to_string(),
            };
            return record;
        }
    };
    record.outcome = match parse_gen_response(&raw) {
        Err(f) => GenOutcome::ParseFailure { message: f.message },
        Ok(result) => {
            match validate_generated(&result, candidate, executor, filter, generator.model_id()) {
                Ok(pair) => GenOutcome::Accepted { pair },
                Err(rejection) => GenOutcome::Rejected { rejection },
            }
        }
    };
    record.response = Some(raw);
    record
}

/// Runs every candidate with at most `max_in_flight` concurrent requests.
/// Records come back in candidate order.
pub fn generate_all(
    candidates: &[GenCandidate],
    generator: &dyn TextGenerator,
    executor: &dyn Executor,
    filter: &FilterConfig,
    max_in_flight: usize,
) -> Result<Vec<AuditRecord>, rayon::ThreadPoolBuildError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()?;
    Ok(pool.install(|| {
        candidates
            .par_iter()
            .enumerate()
            .map(|(i, c)| generate_one(i, c, generator, executor, filter))
            .collect()
    }))
}
