//! Line classification of a correct SQL against its bug SQL.
//!
//! Lines are compared as whole strings after stripping trailing whitespace.
//! Consistent lines are the correct-side half of a longest common
//! subsequence. When several longest subsequences exist, the one whose
//! correct-side line indices are lexicographically smallest wins, so the
//! earliest candidate line is marked consistent.

use std::collections::HashMap;

use crate::model::{split_lines, DiffLine, LineClass, LineDiff};

pub fn compute_line_diff(bug_sql: &str, correct_sql: &str) -> LineDiff {
    let bug: Vec<&str> = split_lines(bug_sql).collect();
    let correct: Vec<&str> = split_lines(correct_sql).collect();
    let mut is_consistent = vec![false; correct.len()];
    for (_, j) in lcs_matches(&bug, &correct) {
        is_consistent[j] = true;
    }
    let lines = correct
        .iter()
        .zip(is_consistent)
        .enumerate()
        .map(|(index, (text, keep))| DiffLine {
            index,
            text: (*text).to_owned(),
            class: if keep {
                LineClass::Consistent
            } else {
                LineClass::Diff
            },
        })
        .collect();
    LineDiff::from_lines(lines, bug.len()).expect("indices are generated in order")
}

/// Matched `(bug line, correct line)` index pairs of the longest common
/// subsequence chosen by [`compute_line_diff`], in increasing order.
pub fn line_matches(bug_sql: &str, correct_sql: &str) -> Vec<(usize, usize)> {
    let bug: Vec<&str> = split_lines(bug_sql).collect();
    let correct: Vec<&str> = split_lines(correct_sql).collect();
    lcs_matches(&bug, &correct)
}

/// Index pairs of the longest common subsequence with the lexicographically
/// smallest correct-side indices (each matched to its earliest bug line),
/// comparing lines with trailing whitespace removed.
fn lcs_matches(bug: &[&str], correct: &[&str]) -> Vec<(usize, usize)> {
    // Intern lines so the DP compares integers.
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut a = Vec::with_capacity(bug.len());
    let mut b = Vec::with_capacity(correct.len());
    for (lines, out) in [(bug, &mut a), (correct, &mut b)] {
        for line in lines {
            let next = ids.len() as u32;
            out.push(*ids.entry(line.trim_end()).or_insert(next));
        }
    }

    // A shared prefix is always part of the lexicographically smallest LCS.
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let (n, m) = (a.len(), b.len());

    // suffix[i][j] = LCS length of a[i..] and b[j..]
    let width = m + 1;
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i * width + j] = if a[i] == b[j] {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }

    // Positions of each line id in `a`, ascending, for earliest-match lookup.
    let mut positions: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, id) in a.iter().enumerate() {
        positions.entry(*id).or_default().push(i);
    }

    let mut out: Vec<(usize, usize)> = (0..prefix).map(|k| (k, k)).collect();
    let (mut i, mut j) = (0, 0);
    let mut remaining = suffix[0];
    while remaining > 0 {
        // Smallest j' whose earliest match i' >= i still completes an LCS.
        // Taking the earliest i' keeps every later choice available.
        let (ni, nj) = (j..m)
            .find_map(|jj| {
                let ps = positions.get(&b[jj])?;
                let k = ps.partition_point(|&p| p < i);
                let ii = *ps.get(k)?;
                (suffix[(ii + 1) * width + jj + 1] + 1 == remaining).then_some((ii, jj))
            })
            .expect("an LCS continuation exists while remaining > 0");
        out.push((prefix + ni, prefix + nj));
        i = ni + 1;
        j = nj + 1;
        remaining -= 1;
    }
    out
}
