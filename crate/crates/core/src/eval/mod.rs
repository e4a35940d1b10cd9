//! Judging predicted fixes against ground truths by canonical AST equality,
//! and accuracy reporting per category.

mod normalize;

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use sqlparser::ast::{Expr, ObjectName, Statement, Visit, Visitor};

pub use normalize::{normalize_ast, CanonicalSql, NORMALIZATION_VERSION};

use crate::model::CategoryPath;
use crate::sql::Dialect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    #[serde(default)]
    pub schema_ddl: Vec<String>,
    pub bug_sql: String,
    pub error_message: String,
    pub ground_truths: Vec<String>,
    pub category: CategoryPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    Different { summary: String },
    PredictionParseError { message: String },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
}

/// A case whose ground truths cannot be used for judging.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid case: {0}")]
pub struct InvalidCase(pub String);

/// Ground truths of a case in canonical form.
#[derive(Debug, Clone)]
pub struct PreparedCase {
    truths: Vec<CanonicalSql>,
}

impl PreparedCase {
    pub fn new(case: &EvalCase, dialect: Dialect) -> Result<Self, InvalidCase> {
        if case.ground_truths.is_empty() {
            return Err(InvalidCase("no ground truth".into()));
        }
        let truths = case
            .ground_truths
            .iter()
            .enumerate()
            .map(|(i, g)| {
                normalize_ast(g, dialect)
                    .map_err(|e| InvalidCase(format!("ground truth {i} does not parse: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(PreparedCase { truths })
    }

    pub fn judge(&self, prediction: &str, dialect: Dialect) -> Verdict {
        let predicted = match normalize_ast(prediction, dialect) {
            Ok(p) => p,
            Err(e) => return Verdict::PredictionParseError { message: e.message },
        };
        if self.truths.contains(&predicted) {
            return Verdict::Equivalent;
        }
        Verdict::Different {
            summary: diff_summary(&self.truths[0], &predicted),
        }
    }
}

/// Judges `prediction` against every ground truth of `case`; equality with
/// any of them is enough.
pub fn judge(prediction: &str, case: &EvalCase, dialect: Dialect) -> Result<Verdict, InvalidCase> {
    Ok(PreparedCase::new(case, dialect)?.judge(prediction, dialect))
}

/// Leaf nodes in pre-order: identifiers, literals and relation names.
#[derive(Default)]
struct Leaves(Vec<String>);

impl Visitor for Leaves {
    type Break = ();

    fn pre_visit_relation(&mut self, relation: &ObjectName) -> ControlFlow<()> {
        self.0.push(format!("relation `{relation}`"));
        ControlFlow::Continue(())
    }

    fn pre_visit_expr(&mut self, expr: &Expr) -> ControlFlow<()> {
        let leaf = match expr {
            Expr::Identifier(id) => format!("identifier `{id}`"),
            Expr::CompoundIdentifier(parts) => format!(
                "identifier `{}`",
                parts
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(".")
            ),
            Expr::Value(v) => format!("value `{v}`"),
            _ => return ControlFlow::Continue(()),
        };
        self.0.push(leaf);
        ControlFlow::Continue(())
    }
}

/// Expressions in pre-order.
#[derive(Default)]
struct Exprs(Vec<Expr>);

impl Visitor for Exprs {
    type Break = ();

    fn pre_visit_expr(&mut self, expr: &Expr) -> ControlFlow<()> {
        self.0.push(expr.clone());
        ControlFlow::Continue(())
    }
}

fn visit_all<V: Visitor<Break = ()>>(statements: &[Statement], visitor: &mut V) {
    for s in statements {
        let _ = s.visit(visitor);
    }
}

fn first_mismatch<T: PartialEq>(a: &[T], b: &[T]) -> Option<usize> {
    let common = a.iter().zip(b).position(|(x, y)| x != y);
    common.or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}

fn describe<T>(items: &[T], i: usize, show: impl Fn(&T) -> String) -> String {
    items.get(i).map_or_else(|| "nothing".to_string(), show)
}

/// Names the first structural difference between two canonical trees:
/// a differing leaf if there is one, else the outermost differing
/// expression, else the first differing statement.
pub fn diff_summary(expected: &CanonicalSql, found: &CanonicalSql) -> String {
    let (es, fs) = (expected.statements(), found.statements());
    if es.len() != fs.len() {
        return format!("expected {} statement(s), found {}", es.len(), fs.len());
    }
    let mut le = Leaves::default();
    let mut lf = Leaves::default();
    visit_all(es, &mut le);
    visit_all(fs, &mut lf);
    if let Some(i) = first_mismatch(&le.0, &lf.0) {
        return format!(
            "expected {}, found {}",
            describe(&le.0, i, Clone::clone),
            describe(&lf.0, i, Clone::clone)
        );
    }
    let mut xe = Exprs::default();
    let mut xf = Exprs::default();
    visit_all(es, &mut xe);
    visit_all(fs, &mut xf);
    if let Some(i) = first_mismatch(&xe.0, &xf.0) {
        let show = |e: &Expr| format!("expression `{e}`");
        return format!(
            "expected {}, found {}",
            describe(&xe.0, i, show),
            describe(&xf.0, i, show)
        );
    }
    let i = first_mismatch(es, fs).unwrap_or(0);
    format!(
        "statement {i} differs: expected `{}`, found `{}`",
        es[i], fs[i]
    )
}

/// Outcome of one case, as written by the evaluate command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub category: CategoryPath,
    #[serde(flatten)]
    pub outcome: CaseOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CaseOutcome {
    Judged(Verdict),
    Invalid { invalid: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub equivalent: usize,
    pub total: usize,
    /// `None` when the bucket has no valid case.
    pub accuracy: Option<f64>,
}

impl Tally {
    fn add(&mut self, equivalent: bool) {
        self.total += 1;
        self.equivalent += usize::from(equivalent);
        self.accuracy = Some(self.equivalent as f64 / self.total as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTally {
    pub group: Vec<String>,
    #[serde(flatten)]
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidEntry {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub normalization_version: u32,
    pub overall: Tally,
    pub by_category: Vec<GroupTally>,
    pub by_level2: Vec<GroupTally>,
    pub by_level1: Vec<GroupTally>,
    pub invalid_cases: Vec<InvalidEntry>,
}

fn grouped(map: BTreeMap<Vec<String>, Tally>) -> Vec<GroupTally> {
    map.into_iter()
        .map(|(group, tally)| GroupTally { group, tally })
        .collect()
}

/// Accuracy over valid cases: overall, per leaf category and rolled up to
/// the second and first levels. Invalid cases are listed, not counted.
pub fn accuracy_report(results: &[CaseResult]) -> AccuracyReport {
    let mut overall = Tally::default();
    let mut leaf = BTreeMap::<Vec<String>, Tally>::new();
    let mut l2 = BTreeMap::<Vec<String>, Tally>::new();
    let mut l1 = BTreeMap::<Vec<String>, Tally>::new();
    let mut invalid_cases = Vec::new();
    for r in results {
        let verdict = match &r.outcome {
            CaseOutcome::Judged(v) => v,
            CaseOutcome::Invalid { invalid } => {
                invalid_cases.push(InvalidEntry {
                    id: r.id.clone(),
                    reason: invalid.clone(),
                });
                continue;
            }
        };
        let ok = verdict.is_equivalent();
        let c = &r.category;
        overall.add(ok);
        leaf.entry(vec![
            c.level1().into(),
            c.level2().into(),
            c.level3().into(),
        ])
        .or_default()
        .add(ok);
        l2.entry(vec![c.level1().into(), c.level2().into()])
            .or_default()
            .add(ok);
        l1.entry(vec![c.level1().into()]).or_default().add(ok);
    }
    AccuracyReport {
        normalization_version: NORMALIZATION_VERSION,
        overall,
        by_category: grouped(leaf),
        by_level2: grouped(l2),
        by_level1: grouped(l1),
        invalid_cases,
    }
}
