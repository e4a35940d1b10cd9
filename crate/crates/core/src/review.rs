//! Human spot check of sampled pairs with a pass-rate gate.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::BugFixPair;
use crate::rng::splitmix64_at;

pub const DEFAULT_GATE: f64 = 0.85;

/// Picks `ceil(rate * n)` indices out of `0..n`, deterministically for a
/// given seed, returned in ascending order.
pub fn select_for_review(n: usize, rate: f64, seed: u64) -> Vec<usize> {
    let k = ((rate.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (splitmix64_at(seed, i as u64), i));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub index: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReviewSummary {
    pub decisions: Vec<ReviewDecision>,
    /// Whether the reviewer stopped before the end of the sample.
    pub stopped_early: bool,
}

impl ReviewSummary {
    pub fn reviewed(&self) -> usize {
        self.decisions.len()
    }

    pub fn accepted(&self) -> usize {
        self.decisions.iter().filter(|d| d.accepted).count()
    }

    /// Accepted over reviewed; `None` if nothing was reviewed.
    pub fn pass_rate(&self) -> Option<f64> {
        (self.reviewed() > 0).then(|| self.accepted() as f64 / self.reviewed() as f64)
    }

    pub fn passes(&self, gate: f64) -> Option<bool> {
        self.pass_rate().map(|r| r >= gate)
    }
}

fn show_pair<W: Write>(
    out: &mut W,
    pos: usize,
    total: usize,
    index: usize,
    p: &BugFixPair,
) -> std::io::Result<()> {
    writeln!(out, "=== pair {index} ({pos}/{total}) ===")?;
    if !p.schema_ddl.is_empty() {
        writeln!(out, "--- schema ---\n{}", p.schema_ddl.join("\n"))?;
    }
    writeln!(out, "--- bug sql ---\n{}", p.bug_sql)?;
    writeln!(out, "--- error ---\n{}", p.error_message)?;
    writeln!(out, "--- correct sql ---\n{}", p.correct_sql)?;
    if let Some(c) = &p.category {
        writeln!(out, "--- category ---\n{c}")?;
    }
    Ok(())
}

/// Interactive loop: for each selected pair, shows it on `output` and reads
/// `y`, `n` or `q` from `input`. End of input stops the review like `q`.
pub fn run_review<R: BufRead, W: Write>(
    pairs: &[BugFixPair],
    selected: &[usize],
    mut input: R,
    mut output: W,
) -> std::io::Result<ReviewSummary> {
    let mut summary = ReviewSummary::default();
    for (pos, &index) in selected.iter().enumerate() {
        show_pair(&mut output, pos + 1, selected.len(), index, &pairs[index])?;
        loop {
            write!(output, "accept? [y/n/q] ")?;
            output.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                summary.stopped_early = true;
                writeln!(output)?;
                return Ok(summary);
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "y" | "yes" => summary.decisions.push(ReviewDecision {
                    index,
                    accepted: true,
                }),
                "n" | "no" => summary.decisions.push(ReviewDecision {
                    index,
                    accepted: false,
                }),
                "q" | "quit" => {
                    summary.stopped_early = true;
                    return Ok(summary);
                }
                _ => continue,
            }
            break;
        }
    }
    Ok(summary)
}
