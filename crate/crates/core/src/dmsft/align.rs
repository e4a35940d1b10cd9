//! Line-to-token alignment.
//!
//! A token belongs to the line containing its first byte; a token that
//! straddles a newline therefore takes the weight of the line it starts on.

use crate::model::{line_byte_ranges, LineClass, LineDiff, MaskPlan};
use crate::tokenizer::Token;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("target text has {text_lines} lines but the diff has {diff_lines}")]
    LineCountMismatch {
        text_lines: usize,
        diff_lines: usize,
    },
    #[error("line {index} of the target text does not match the diff")]
    LineTextMismatch { index: usize },
    #[error("mask plan covers {plan} lines but the diff has {diff}")]
    PlanMismatch { plan: usize, diff: usize },
    #[error("token {index} has an invalid span {start}..{end} for text of {len} bytes")]
    BadSpan {
        index: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("token {index} overlaps or precedes token {previous}")]
    Overlap { index: usize, previous: usize },
}

/// Index of the line each token starts on. Validates the tokenizer contract:
/// spans inside the text, non-overlapping, in order.
pub fn token_line_indices(target_text: &str, tokens: &[Token]) -> Result<Vec<usize>, AlignError> {
    let ranges = line_byte_ranges(target_text);
    let len = target_text.len();
    let mut out = Vec::with_capacity(tokens.len());
    let mut line = 0;
    let mut previous_end = 0;
    for (index, tok) in tokens.iter().enumerate() {
        if tok.start >= len || tok.end > len || tok.end < tok.start {
            return Err(AlignError::BadSpan {
                index,
                start: tok.start,
                end: tok.end,
                len,
            });
        }
        if index > 0 && tok.start < previous_end {
            return Err(AlignError::Overlap {
                index,
                previous: index - 1,
            });
        }
        previous_end = tok.end;
        while !ranges[line].contains(&tok.start) {
            line += 1;
        }
        out.push(line);
    }
    Ok(out)
}

fn check_target(diff: &LineDiff, target_text: &str) -> Result<(), AlignError> {
    let text_lines: Vec<&str> = crate::model::split_lines(target_text).collect();
    if text_lines.len() != diff.len() {
        return Err(AlignError::LineCountMismatch {
            text_lines: text_lines.len(),
            diff_lines: diff.len(),
        });
    }
    for (line, text) in diff.lines().iter().zip(text_lines) {
        if line.text != text {
            return Err(AlignError::LineTextMismatch { index: line.index });
        }
    }
    Ok(())
}

/// Returns `plan` with `token_weights` filled in, one weight per token.
pub fn align_tokens(
    diff: &LineDiff,
    plan: &MaskPlan,
    target_text: &str,
    tokens: &[Token],
) -> Result<MaskPlan, AlignError> {
    check_target(diff, target_text)?;
    if plan.line_mask.len() != diff.len() {
        return Err(AlignError::PlanMismatch {
            plan: plan.line_mask.len(),
            diff: diff.len(),
        });
    }
    let weights = token_line_indices(target_text, tokens)?
        .into_iter()
        .map(|line| plan.line_mask[line].weight)
        .collect();
    Ok(MaskPlan {
        token_weights: Some(weights),
        ..plan.clone()
    })
}

/// Line class of each token, by the same starting-line rule.
pub fn token_classes(
    diff: &LineDiff,
    target_text: &str,
    tokens: &[Token],
) -> Result<Vec<LineClass>, AlignError> {
    check_target(diff, target_text)?;
    Ok(token_line_indices(target_text, tokens)?
        .into_iter()
        .map(|line| diff.lines()[line].class)
        .collect())
}
