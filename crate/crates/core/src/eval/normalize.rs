//! Canonical AST form used for fix comparison.
//!
//! Normalization steps, applied in order:
//!
//! 1. comments are removed and keywords and unquoted identifiers are
//!    lowercased (string literals and quoted identifiers are untouched);
//! 2. the text is parsed under the selected dialect;
//! 3. parentheses around expressions are dropped (the tree already encodes
//!    grouping);
//! 4. chains of `AND` and of `OR` are flattened and their operands sorted,
//!    and the two operands of `=` and `<>` are sorted.
//!
//! Nothing else is reordered: select lists, column definitions, `SET` lists
//! and `ORDER BY` keys keep their source order, and literals are kept
//! byte-exact.

use std::fmt;
use std::ops::ControlFlow;

use sqlparser::ast::{BinaryOperator, Expr, Statement, VisitMut, VisitorMut};

use crate::sql::{self, Dialect, SqlParseError};

/// Version tag of the normalization rules, reported alongside accuracy
/// numbers so results from different rule sets are not mixed.
pub const NORMALIZATION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalSql {
    statements: Vec<Statement>,
}

impl CanonicalSql {
    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }
}

impl fmt::Display for CanonicalSql {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.statements.iter().enumerate() {
            if i > 0 {
                f.write_str(";\n")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

pub fn normalize_ast(sql: &str, dialect: Dialect) -> Result<CanonicalSql, SqlParseError> {
    let folded = sql::fold_case_and_strip_comments(sql, dialect)?;
    let mut statements = sql::parse(&folded, dialect)?;
    if statements.is_empty() {
        return Err(SqlParseError {
            message: "no statement".into(),
        });
    }
    let _ = statements.visit(&mut Canonicalizer);
    Ok(CanonicalSql { statements })
}

struct Canonicalizer;

impl VisitorMut for Canonicalizer {
    type Break = ();

    fn post_visit_expr(&mut self, expr: &mut Expr) -> ControlFlow<()> {
        while let Expr::Nested(inner) = expr {
            let inner = take(inner);
            *expr = inner;
        }
        if let Expr::BinaryOp { op, .. } = expr {
            match op {
                BinaryOperator::And | BinaryOperator::Or => {
                    let op = op.clone();
                    let mut operands = Vec::new();
                    flatten(take(expr), &op, &mut operands);
                    operands.sort();
                    *expr = operands
                        .into_iter()
                        .reduce(|left, right| Expr::BinaryOp {
                            left: Box::new(left),
                            op: op.clone(),
                            right: Box::new(right),
                        })
                        .expect("a binary chain has at least two operands");
                }
                BinaryOperator::Eq | BinaryOperator::NotEq => {
                    if let Expr::BinaryOp { left, right, .. } = expr {
                        if right < left {
                            std::mem::swap(left, right);
                        }
                    }
                }
                _ => {}
            }
        }
        ControlFlow::Continue(())
    }
}

fn take(expr: &mut Expr) -> Expr {
    std::mem::replace(expr, Expr::value(sqlparser::ast::Value::Null))
}

fn flatten(expr: Expr, op: &BinaryOperator, out: &mut Vec<Expr>) {
    match expr {
        Expr::BinaryOp {
            left,
            op: inner,
            right,
        } if &inner == op => {
            flatten(*left, op, out);
            flatten(*right, op, out);
        }
        other => out.push(other),
    }
}
