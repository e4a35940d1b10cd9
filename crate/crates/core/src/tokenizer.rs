//! Tokenizer adapters used to align line masks with model tokens.
//!
//! An adapter maps text to `(id, byte_start, byte_end)` triples. Two adapters
//! are built in (whitespace runs and raw bytes); anything else plugs in as an
//! external command that reads UTF-8 text on stdin and writes one JSON triple
//! `[id, start, end]` per line on stdout.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("failed to run tokenizer command `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("tokenizer command `{command}` exited with {status}: {stderr}")]
    Failed {
        command: String,
        status: std::process::ExitStatus,
        stderr: String,
    },
    #[error("tokenizer output line {line}: {message}")]
    Output { line: usize, message: String },
}

pub trait TokenizerAdapter: Send + Sync {
    fn tokenize(&self, text: &str) -> Result<Vec<Token>, TokenizerError>;
}

/// FNV-1a over the token bytes; stable across runs and platforms.
fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811C_9DC5;
    for b in bytes {
        h ^= u32::from(*b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Maximal runs of non-whitespace characters. Ids are FNV-1a hashes of the
/// token text.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl TokenizerAdapter for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Result<Vec<Token>, TokenizerError> {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            match (ch.is_whitespace(), start) {
                (true, Some(s)) => {
                    tokens.push(Token {
                        id: fnv1a32(&text.as_bytes()[s..i]),
                        start: s,
                        end: i,
                    });
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            tokens.push(Token {
                id: fnv1a32(&text.as_bytes()[s..]),
                start: s,
                end: text.len(),
            });
        }
        Ok(tokens)
    }
}

/// One token per byte, id = byte value.
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteTokenizer;

impl TokenizerAdapter for ByteTokenizer {
    fn tokenize(&self, text: &str) -> Result<Vec<Token>, TokenizerError> {
        Ok(text
            .bytes()
            .enumerate()
            .map(|(i, b)| Token {
                id: u32::from(b),
                start: i,
                end: i + 1,
            })
            .collect())
    }
}

/// Runs a shell command per call and parses its `[id, start, end]` lines.
#[derive(Debug, Clone)]
pub struct CommandTokenizer {
    command: String,
}

impl CommandTokenizer {
    pub fn new(command: impl Into<String>) -> Self {
        CommandTokenizer {
            command: command.into(),
        }
    }
}

impl TokenizerAdapter for CommandTokenizer {
    fn tokenize(&self, text: &str) -> Result<Vec<Token>, TokenizerError> {
        let spawn_err = |source| TokenizerError::Spawn {
            command: self.command.clone(),
            source,
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(spawn_err)?;
        // Write from a separate thread so a tokenizer that streams output
        // before reading all input cannot deadlock on full pipes.
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let input = text.to_owned();
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let output = child.wait_with_output().map_err(spawn_err)?;
        writer
            .join()
            .expect("stdin writer thread panicked")
            .map_err(spawn_err)?;
        if !output.status.success() {
            return Err(TokenizerError::Failed {
                command: self.command.clone(),
                status: output.status,
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_owned(),
            });
        }
        parse_triples(&String::from_utf8_lossy(&output.stdout))
    }
}

/// Parses the external tokenizer wire format: one `[id, start, end]` JSON
/// array per non-blank line.
pub fn parse_triples(stdout: &str) -> Result<Vec<Token>, TokenizerError> {
    stdout
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let (id, start, end): (u32, usize, usize) =
                serde_json::from_str(l).map_err(|e| TokenizerError::Output {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            Ok(Token { id, start, end })
        })
        .collect()
}
