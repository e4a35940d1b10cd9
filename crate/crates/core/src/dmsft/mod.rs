//! Dynamic line-mask fine-tuning support: line diffs, mask sampling, token
//! alignment, the masked loss and sample emission.

mod align;
mod diff;
mod loss;
mod mask;
mod samples;
mod stats;

pub use align::{align_tokens, token_classes, token_line_indices, AlignError};
pub use diff::{compute_line_diff, line_matches};
pub use loss::{masked_loss, nll_sum, ExactSum, LossError};
pub use mask::{line_weight, sample_mask, InvalidMaskRatio, MaskRatio};
pub use samples::{build_sample, build_samples, BuildMode, BuildOutput, SkippedPair};
pub use stats::{diff_distribution_report, DiffHistogram, HistogramRow};
