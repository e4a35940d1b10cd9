use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sqlfix_core::sql::Dialect;

#[derive(Debug, Parser)]
#[command(name = "sqlfix", version, about = "SQL bug-fix dataset pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice (mask sampling, review sampling).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with [mine], [filter] and [executor] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_parser = parse_dialect, default_value = "spark")]
    pub dialect: Dialect,
}

fn parse_dialect(s: &str) -> Result<Dialect, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine bug-fix pairs from an events log.
    Mine {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep pairs whose bug fails, whose fix runs and whose diff is small.
    Filter {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        kept: PathBuf,
        #[arg(long)]
        rejected: PathBuf,
        /// Remote executor URL; the built-in syntax validator is used otherwise.
        #[arg(long)]
        executor_url: Option<String>,
    },
    /// Attach a taxonomy category to each pair and report counts.
    Classify {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON histogram output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Select corpus SQL matching each error feature.
    Recall {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recall candidates and generate bug SQL for them with an LLM.
    Generate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        endpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        audit: PathBuf,
        #[arg(long)]
        executor_url: Option<String>,
    },
    /// Render training samples from pairs.
    Build {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = BuildModeArg::Span)]
        mode: BuildModeArg,
        /// Mask ratio for baked mode.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value_t = TokenizerArg::Whitespace)]
        tokenizer: TokenizerArg,
        /// External tokenizer command; overrides --tokenizer.
        #[arg(long)]
        tokenizer_cmd: Option<String>,
    },
    /// Histogram of diff-line counts.
    Diffstats {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Judge predictions against an evaluation set.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        evalset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Interactive spot check of a sample of pairs.
    Review {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        sample_rate: f64,
        #[arg(long, default_value_t = sqlfix_core::review::DEFAULT_GATE)]
        gate: f64,
        /// Optional JSONL log of the decisions.
        #[arg(long)]
        decisions: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuildModeArg {
    Span,
    Baked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TokenizerArg {
    Whitespace,
    Bytes,
}
