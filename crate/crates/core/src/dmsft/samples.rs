//! Training sample emission.

use rayon::prelude::*;

use crate::dmsft::{align_tokens, compute_line_diff, sample_mask, MaskRatio};
use crate::model::{line_byte_ranges, BakedMask, BugFixPair, LineSpan, TrainingSample};
use crate::prompt::render_bug_fix_prompt;
use crate::rng::derive_seed;
use crate::tokenizer::TokenizerAdapter;

pub enum BuildMode<'a> {
    /// Emit line spans only; the trainer re-samples masks itself.
    SpanMetadata,
    /// Also emit token weights for one mask realization. Sample `k` uses the
    /// seed `derive_seed(seed, k)`.
    Baked {
        p: MaskRatio,
        seed: u64,
        tokenizer: &'a dyn TokenizerAdapter,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedPair {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct BuildOutput {
    pub samples: Vec<TrainingSample>,
    pub skipped: Vec<SkippedPair>,
}

pub fn build_sample(
    pair: &BugFixPair,
    index: usize,
    mode: &BuildMode<'_>,
) -> Result<TrainingSample, String> {
    let target = &pair.correct_sql;
    let diff = compute_line_diff(&pair.bug_sql, target);
    if diff.is_empty() {
        return Err("correct sql is empty".into());
    }
    if diff.diff_line_count() == 0 {
        return Err("correct sql has no diff lines against the bug sql".into());
    }
    let line_spans = line_byte_ranges(target)
        .into_iter()
        .zip(diff.lines())
        .map(|(r, line)| LineSpan {
            start: r.start,
            end: r.end,
            class: line.class,
        })
        .collect();

    let (baked_token_weights, baked_mask) = match mode {
        BuildMode::SpanMetadata => (None, None),
        BuildMode::Baked { p, seed, tokenizer } => {
            let sample_seed = derive_seed(*seed, index as u64);
            let plan = sample_mask(&diff, *p, sample_seed);
            let tokens = tokenizer.tokenize(target).map_err(|e| e.to_string())?;
            let plan = align_tokens(&diff, &plan, target, &tokens).map_err(|e| e.to_string())?;
            (
                plan.token_weights,
                Some(BakedMask {
                    p: p.get(),
                    seed: sample_seed,
                }),
            )
        }
    };

    Ok(TrainingSample {
        input_text: render_bug_fix_prompt(&pair.schema_ddl, &pair.bug_sql, &pair.error_message),
        target_text: target.clone(),
        line_spans,
        baked_token_weights,
        baked_mask,
    })
}

/// Builds samples in input order; pairs that cannot produce a valid sample
/// are reported in `skipped`. Runs on the current rayon pool.
pub fn build_samples(pairs: &[BugFixPair], mode: &BuildMode<'_>) -> BuildOutput {
    let results: Vec<_> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| build_sample(pair, i, mode))
        .collect();
    let mut out = BuildOutput::default();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => out.samples.push(s),
            Err(reason) => out.skipped.push(SkippedPair { index, reason }),
        }
    }
    out
}
