//! Toolkit for building SQL bug-fixing datasets and evaluating repair models.
//!
//! The crate mines (bug SQL, correct SQL) pairs from editor and execution
//! logs, filters and classifies them, drives LLM-assisted bug generation,
//! prepares dynamic line-masked fine-tuning samples and judges predicted
//! fixes by normalized AST comparison. The `sqlfix` binary wires every stage
//! into a line-delimited JSON pipeline.

pub mod dmsft;
pub mod eval;
pub mod executor;
pub mod filter;
pub mod generate;
pub mod http;
pub mod io;
pub mod mining;
pub mod model;
pub mod prompt;
pub mod review;
pub mod rng;
pub mod sql;
pub mod taxonomy;
pub mod tokenizer;
