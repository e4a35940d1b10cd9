//! SQL dialect selection and parsing helpers shared by the syntax validator
//! and the AST evaluator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sqlparser::ast::Statement;
use sqlparser::dialect::{
    AnsiDialect, DatabricksDialect, Dialect as ParserDialect, GenericDialect, HiveDialect,
    MySqlDialect, PostgreSqlDialect,
};
use sqlparser::parser::{Parser, ParserError};
use sqlparser::tokenizer::{Location, Token, Tokenizer, Whitespace};

/// Dialects the parser accepts. `Spark` uses the Databricks grammar, which
/// is Spark SQL plus a few extensions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    #[default]
    Spark,
    Hive,
    Generic,
    Ansi,
    Mysql,
    Postgres,
}

impl Dialect {
    pub const ALL: [Dialect; 6] = [
        Dialect::Spark,
        Dialect::Hive,
        Dialect::Generic,
        Dialect::Ansi,
        Dialect::Mysql,
        Dialect::Postgres,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dialect::Spark => "spark",
            Dialect::Hive => "hive",
            Dialect::Generic => "generic",
            Dialect::Ansi => "ansi",
            Dialect::Mysql => "mysql",
            Dialect::Postgres => "postgres",
        }
    }

    fn parser_dialect(self) -> Box<dyn ParserDialect> {
        match self {
            Dialect::Spark => Box::new(DatabricksDialect {}),
            Dialect::Hive => Box::new(HiveDialect {}),
            Dialect::Generic => Box::new(GenericDialect {}),
            Dialect::Ansi => Box::new(AnsiDialect {}),
            Dialect::Mysql => Box::new(MySqlDialect {}),
            Dialect::Postgres => Box::new(PostgreSqlDialect {}),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dialect::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown dialect `{s}`"))
    }
}

/// Parser diagnostic with the offending source line attached when the
/// parser reports a position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct SqlParseError {
    pub message: String,
}

impl SqlParseError {
    fn from_parser(sql: &str, err: &ParserError) -> Self {
        let raw = err.to_string();
        let context = error_line(&raw)
            .and_then(|n| sql.lines().nth(n.checked_sub(1)?))
            .map(|line| format!(" near line `{}`", line.trim()))
            .unwrap_or_default();
        SqlParseError {
            message: format!("{raw}{context}"),
        }
    }
}

/// Extracts `N` from a "... at Line: N, Column: M" diagnostic.
fn error_line(message: &str) -> Option<usize> {
    let rest = &message[message.rfind("Line: ")? + "Line: ".len()..];
    rest.split(',').next()?.trim().parse().ok()
}

pub fn parse(sql: &str, dialect: Dialect) -> Result<Vec<Statement>, SqlParseError> {
    Parser::parse_sql(dialect.parser_dialect().as_ref(), sql)
        .map_err(|e| SqlParseError::from_parser(sql, &e))
}

/// Rewrites `sql` with comments replaced by a single space and keywords and
/// unquoted identifiers lowercased. String literals, quoted identifiers and
/// all other bytes are copied unchanged.
pub fn fold_case_and_strip_comments(sql: &str, dialect: Dialect) -> Result<String, SqlParseError> {
    let d = dialect.parser_dialect();
    let tokens = Tokenizer::new(d.as_ref(), sql)
        .tokenize_with_location()
        .map_err(|e| SqlParseError {
            message: format!("tokenizer error: {e}"),
        })?;
    let index = LineIndex::new(sql);
    let mut out = String::with_capacity(sql.len());
    for tok in &tokens {
        let (Some(start), Some(end)) = (index.offset(tok.span.start), index.offset(tok.span.end))
        else {
            continue;
        };
        let text = &sql[start..end];
        match &tok.token {
            Token::Whitespace(
                Whitespace::SingleLineComment { .. } | Whitespace::MultiLineComment(_),
            ) => {
                out.push(' ');
                // A single-line comment swallows its newline terminator.
                if text.ends_with('\n') {
                    out.push('\n');
                }
            }
            Token::Word(w) if w.quote_style.is_none() => out.push_str(&text.to_lowercase()),
            _ => out.push_str(text),
        }
    }
    Ok(out)
}

/// Maps tokenizer (line, column) locations to byte offsets. Columns count
/// characters, starting at 1.
struct LineIndex<'a> {
    text: &'a str,
    line_starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    fn new(text: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { text, line_starts }
    }

    fn offset(&self, loc: Location) -> Option<usize> {
        if loc.line == 0 {
            return None;
        }
        let line_start = *self.line_starts.get(loc.line as usize - 1)?;
        let col = loc.column.checked_sub(1)? as usize;
        let line = &self.text[line_start..];
        match line.char_indices().nth(col) {
            Some((i, _)) => Some(line_start + i),
            None if line.chars().count() == col => Some(self.text.len()),
            None => None,
        }
    }
}
