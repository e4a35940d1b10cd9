//! Rule-based classification of bugs into a three-level category tree.
//!
//! A taxonomy is a TOML file:
//!
//! ```toml
//! version = 1
//! case_insensitive = true      # default for every rule
//!
//! [[rule]]
//! error = "Table or view not found"
//! sql = "(?i)\\bfrom\\b"       # optional
//! path = ["Semantic", "Reference", "MissingTable"]
//! priority = 10                # default 0
//! case_insensitive = false     # optional per-rule override
//! ```
//!
//! Patterns use the `regex` crate syntax and are searched (not anchored).
//! The rule with the highest priority among those whose error pattern and
//! optional SQL pattern both match wins; equal priorities go to the rule
//! listed first.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::model::{BugFixPair, CategoryPath, UNCLASSIFIED};

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("cannot read taxonomy {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid taxonomy file: {0}")]
    Syntax(String),
    #[error("unsupported taxonomy version {0}")]
    Version(u32),
    #[error("rule {rule}: {message}")]
    Rule { rule: usize, message: String },
    #[error("rules {first} and {second} share the same patterns")]
    DuplicatePatterns { first: usize, second: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    #[serde(default = "one")]
    version: u32,
    #[serde(default = "yes")]
    case_insensitive: bool,
    #[serde(default, rename = "rule")]
    rules: Vec<RuleSpec>,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    error: String,
    #[serde(default)]
    sql: Option<String>,
    path: Vec<String>,
    #[serde(default)]
    priority: i64,
    #[serde(default)]
    case_insensitive: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Rule {
    error: Regex,
    sql: Option<Regex>,
    path: CategoryPath,
    priority: i64,
}

impl Rule {
    pub fn path(&self) -> &CategoryPath {
        &self.path
    }

    pub fn priority(&self) -> i64 {
        self.priority
    }

    fn matches(&self, error_message: &str, bug_sql: &str) -> bool {
        self.error.is_match(error_message)
            && self.sql.as_ref().map_or(true, |r| r.is_match(bug_sql))
    }
}

/// A validated, ready-to-use taxonomy. Immutable and safe to share between
/// threads.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    rules: Vec<Rule>,
}

impl Taxonomy {
    pub fn from_toml_str(text: &str) -> Result<Self, TaxonomyError> {
        let file: TaxonomyFile =
            toml::from_str(text).map_err(|e| TaxonomyError::Syntax(e.to_string()))?;
        if file.version != 1 {
            return Err(TaxonomyError::Version(file.version));
        }
        let mut seen: BTreeMap<(String, Option<String>), usize> = BTreeMap::new();
        let mut rules = Vec::with_capacity(file.rules.len());
        for (i, spec) in file.rules.into_iter().enumerate() {
            let rule_err = |message: String| TaxonomyError::Rule { rule: i, message };
            let key = (spec.error.clone(), spec.sql.clone());
            if let Some(&first) = seen.get(&key) {
                return Err(TaxonomyError::DuplicatePatterns { first, second: i });
            }
            seen.insert(key, i);

            let [l1, l2, l3] = <[String; 3]>::try_from(spec.path).map_err(|p| {
                rule_err(format!("path must have exactly 3 levels, got {}", p.len()))
            })?;
            let path = CategoryPath::new(l1, l2, l3).map_err(|e| rule_err(e.to_string()))?;
            if [path.level1(), path.level2(), path.level3()].contains(&UNCLASSIFIED) {
                return Err(rule_err(format!("`{UNCLASSIFIED}` is reserved")));
            }
            if spec.error.is_empty() {
                return Err(rule_err("error pattern is empty".into()));
            }
            let ci = spec.case_insensitive.unwrap_or(file.case_insensitive);
            let compile = |pattern: &str| {
                RegexBuilder::new(pattern)
                    .case_insensitive(ci)
                    .build()
                    .map_err(|e| rule_err(e.to_string()))
            };
            rules.push(Rule {
                error: compile(&spec.error)?,
                sql: spec.sql.as_deref().map(compile).transpose()?,
                path,
                priority: spec.priority,
            });
        }
        Ok(Taxonomy { rules })
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path).map_err(|source| TaxonomyError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Distinct leaf paths declared by the rules.
    pub fn leaves(&self) -> Vec<&CategoryPath> {
        let mut seen = HashSet::new();
        self.rules
            .iter()
            .map(|r| &r.path)
            .filter(|p| seen.insert(*p))
            .collect()
    }

    /// Whether `path` is declared by some rule or is the reserved
    /// unclassified path.
    pub fn contains(&self, path: &CategoryPath) -> bool {
        path.is_unclassified() || self.rules.iter().any(|r| &r.path == path)
    }

    pub fn classify(&self, error_message: &str, bug_sql: &str) -> CategoryPath {
        if error_message.trim().is_empty() {
            return CategoryPath::unclassified();
        }
        let mut best: Option<&Rule> = None;
        for rule in &self.rules {
            if rule.matches(error_message, bug_sql)
                && best.map_or(true, |b| rule.priority > b.priority)
            {
                best = Some(rule);
            }
        }
        best.map_or_else(CategoryPath::unclassified, |r| r.path.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: CategoryPath,
    pub count: usize,
}

/// Counts per category, sorted by count descending and then by path.
pub fn category_report(pairs: &[BugFixPair], taxonomy: &Taxonomy) -> Vec<CategoryCount> {
    let mut counts: BTreeMap<CategoryPath, usize> = BTreeMap::new();
    for p in pairs {
        *counts
            .entry(taxonomy.classify(&p.error_message, &p.bug_sql))
            .or_default() += 1;
    }
    let mut rows: Vec<CategoryCount> = counts
        .into_iter()
        .map(|(category, count)| CategoryCount { category, count })
        .collect();
    rows.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.category.cmp(&b.category))
    });
    rows
}
