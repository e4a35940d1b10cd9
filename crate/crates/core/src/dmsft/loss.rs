//! Masked sequence loss split into consistent-line and diff-line parts.
//!
//! `l1` is the weighted negative log-likelihood of consistent-line tokens,
//! `l2` the negative log-likelihood of diff-line tokens and `total` the
//! loss over every token. All three are correctly rounded sums of their
//! terms, so `total` does not depend on token order and a plan with every
//! weight set to 1 reproduces the plain negative log-likelihood sum
//! bit-for-bit. `l1 + l2` agrees with `total` to within one rounding per
//! summed term.

use crate::model::{LineClass, LossBreakdown};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("length mismatch: {logprobs} logprobs, {weights} weights, {classes} classes")]
    LengthMismatch {
        logprobs: usize,
        weights: usize,
        classes: usize,
    },
    #[error("token {0} is a diff token with weight 0")]
    MaskedDiffToken(usize),
    #[error("token {index} has weight {weight}; weights must be 0 or 1")]
    BadWeight { index: usize, weight: u8 },
    #[error("token {index} has log-probability {value}; expected a finite value <= 0")]
    BadLogprob { index: usize, value: f64 },
    #[error("no unmasked tokens")]
    NothingUnmasked,
}

pub fn masked_loss(
    token_logprobs: &[f64],
    token_weights: &[u8],
    token_line_class: &[LineClass],
) -> Result<LossBreakdown, LossError> {
    let n = token_logprobs.len();
    if token_weights.len() != n || token_line_class.len() != n {
        return Err(LossError::LengthMismatch {
            logprobs: n,
            weights: token_weights.len(),
            classes: token_line_class.len(),
        });
    }

    let mut consistent = ExactSum::default();
    let mut diff = ExactSum::default();
    let mut all = ExactSum::default();
    let mut unmasked = 0usize;
    for (index, ((&lp, &w), &class)) in token_logprobs
        .iter()
        .zip(token_weights)
        .zip(token_line_class)
        .enumerate()
    {
        if !lp.is_finite() || lp > 0.0 {
            return Err(LossError::BadLogprob { index, value: lp });
        }
        if w > 1 {
            return Err(LossError::BadWeight { index, weight: w });
        }
        if class == LineClass::Diff && w == 0 {
            return Err(LossError::MaskedDiffToken(index));
        }
        if w == 0 {
            continue;
        }
        unmasked += 1;
        let term = -lp;
        match class {
            LineClass::Consistent => consistent.add(term),
            LineClass::Diff => diff.add(term),
        }
        all.add(term);
    }
    if unmasked == 0 {
        return Err(LossError::NothingUnmasked);
    }
    let total = all.value();
    Ok(LossBreakdown {
        l1: consistent.value(),
        l2: diff.value(),
        total,
        unmasked_token_count: unmasked,
        per_token: total / unmasked as f64,
    })
}

/// Plain negative log-likelihood of a sequence, correctly rounded.
pub fn nll_sum(token_logprobs: &[f64]) -> f64 {
    let mut s = ExactSum::default();
    for lp in token_logprobs {
        s.add(-lp);
    }
    s.value()
}

/// Shewchuk's exact floating-point summation with a correctly rounded
/// result (the algorithm behind Python's `math.fsum`). Inputs must be finite.
#[derive(Debug, Default, Clone)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining partials push the
        // exact value past the halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}
