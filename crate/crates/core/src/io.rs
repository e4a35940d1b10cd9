//! Line-delimited JSON records with a `schema_version` field, and atomic
//! file output.
//!
//! Every record written carries `"schema_version": 1`. On input a missing
//! version is read as 1 and any other version is rejected.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u64 = 1;
const VERSION_FIELD: &str = "schema_version";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unsupported schema_version {version}")]
    UnsupportedVersion {
        path: PathBuf,
        line: usize,
        version: String,
    },
}

#[derive(Serialize)]
struct Versioned<'a, T> {
    schema_version: u64,
    #[serde(flatten)]
    record: &'a T,
}

/// Why a single line could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordError {
    Malformed(String),
    UnsupportedVersion(String),
}

pub fn parse_record<T: DeserializeOwned>(line: &str) -> Result<T, RecordError> {
    let mut value: Value =
        serde_json::from_str(line).map_err(|e| RecordError::Malformed(e.to_string()))?;
    let Value::Object(map) = &mut value else {
        return Err(RecordError::Malformed("record is not a JSON object".into()));
    };
    match map.remove(VERSION_FIELD) {
        None => {}
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(RecordError::UnsupportedVersion(other.to_string())),
    }
    serde_json::from_value(value).map_err(|e| RecordError::Malformed(e.to_string()))
}

pub fn to_record_line<T: Serialize>(record: &T) -> String {
    serde_json::to_string(&Versioned {
        schema_version: SCHEMA_VERSION,
        record,
    })
    .expect("record types serialize to JSON objects")
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Reads every record, failing on the first bad line.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let text = read_to_string(path)?;
    numbered_lines(&text)
        .map(|(line, l)| {
            parse_record(l).map_err(|e| match e {
                RecordError::Malformed(message) => IoError::Parse {
                    path: path.to_owned(),
                    line,
                    message,
                },
                RecordError::UnsupportedVersion(version) => IoError::UnsupportedVersion {
                    path: path.to_owned(),
                    line,
                    version,
                },
            })
        })
        .collect()
}

/// Lines that failed to parse in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line: usize,
    pub message: String,
}

/// Reads records, collecting malformed lines instead of failing. An
/// unsupported `schema_version` is still a hard error.
pub fn read_records_lenient<T: DeserializeOwned>(
    path: &Path,
) -> Result<(Vec<T>, Vec<MalformedLine>), IoError> {
    let text = read_to_string(path)?;
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    for (line, l) in numbered_lines(&text) {
        match parse_record(l) {
            Ok(r) => records.push(r),
            Err(RecordError::Malformed(message)) => malformed.push(MalformedLine { line, message }),
            Err(RecordError::UnsupportedVersion(version)) => {
                return Err(IoError::UnsupportedVersion {
                    path: path.to_owned(),
                    line,
                    version,
                })
            }
        }
    }
    Ok((records, malformed))
}

pub fn records_to_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&to_record_line(r));
        out.push('\n');
    }
    out
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let wrap = |source| IoError::Io {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    write_atomic(path, records_to_string(records).as_bytes())
}
