//! Dynamic line mask sampling.
//!
//! Each consistent line is dropped from the loss with probability `p`,
//! independently of every other line. Diff lines always keep weight 1. The
//! draw for line `i` is output `i` of a counter-based SplitMix64 stream keyed
//! by the plan seed (see [`crate::rng`]), so a plan can be recomputed for any
//! subset of lines in any order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{LineClass, LineDiff, LineWeight, MaskPlan};
use crate::rng::unit_f64_at;

/// Mask ratio in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MaskRatio(f64);

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("mask ratio must lie in [0, 1], got {0}")]
pub struct InvalidMaskRatio(pub f64);

impl MaskRatio {
    pub const ZERO: MaskRatio = MaskRatio(0.0);
    pub const ONE: MaskRatio = MaskRatio(1.0);

    pub fn new(p: f64) -> Result<Self, InvalidMaskRatio> {
        if (0.0..=1.0).contains(&p) {
            Ok(MaskRatio(p))
        } else {
            Err(InvalidMaskRatio(p))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for MaskRatio {
    type Error = InvalidMaskRatio;

    fn try_from(p: f64) -> Result<Self, Self::Error> {
        MaskRatio::new(p)
    }
}

impl From<MaskRatio> for f64 {
    fn from(p: MaskRatio) -> f64 {
        p.0
    }
}

impl fmt::Display for MaskRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Weight for one line under `(p, seed)`.
#[inline]
pub fn line_weight(class: LineClass, line_index: usize, p: MaskRatio, seed: u64) -> u8 {
    match class {
        LineClass::Diff => 1,
        LineClass::Consistent => {
            // u < 0 never holds and u < 1 always does, so p = 0 and p = 1
            // are exact.
            if unit_f64_at(seed, line_index as u64) < p.get() {
                0
            } else {
                1
            }
        }
    }
}

pub fn sample_mask(diff: &LineDiff, p: MaskRatio, seed: u64) -> MaskPlan {
    let line_mask = diff
        .lines()
        .iter()
        .map(|line| LineWeight {
            line_index: line.index,
            weight: line_weight(line.class, line.index, p, seed),
        })
        .collect();
    MaskPlan {
        p: p.get(),
        seed,
        line_mask,
        token_weights: None,
    }
}
