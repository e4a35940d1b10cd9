//! Distribution of diff-line counts over a pair corpus.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dmsft::compute_line_diff;
use crate::model::BugFixPair;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DiffHistogram {
    /// diff_line_count -> number of pairs
    pub bins: BTreeMap<usize, usize>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub diff_lines: usize,
    pub count: usize,
    pub fraction: f64,
    pub cumulative_fraction: f64,
}

impl DiffHistogram {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Self {
        let mut h = DiffHistogram::default();
        for c in counts {
            *h.bins.entry(c).or_default() += 1;
            h.total += 1;
        }
        h
    }

    /// Share of pairs with `diff_line_count <= k`.
    pub fn cumulative_fraction(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let at_most: usize = self.bins.range(..=k).map(|(_, c)| c).sum();
        at_most as f64 / self.total as f64
    }

    /// Share of pairs with fewer than `k` diff lines.
    pub fn fraction_below(&self, k: usize) -> f64 {
        match k.checked_sub(1) {
            Some(m) => self.cumulative_fraction(m),
            None => 0.0,
        }
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        let mut seen = 0;
        self.bins
            .iter()
            .map(|(&diff_lines, &count)| {
                seen += count;
                HistogramRow {
                    diff_lines,
                    count,
                    fraction: count as f64 / self.total as f64,
                    cumulative_fraction: seen as f64 / self.total as f64,
                }
            })
            .collect()
    }
}

pub fn diff_distribution_report(pairs: &[BugFixPair]) -> DiffHistogram {
    DiffHistogram::from_counts(
        pairs
            .iter()
            .map(|p| compute_line_diff(&p.bug_sql, &p.correct_sql).diff_line_count()),
    )
}
