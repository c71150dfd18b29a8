//! Low-rank contingency blocks, block elimination, and the filter and
//! fingerprint scores.

mod blocks;
mod eliminate;
mod scores;

pub use blocks::{
    line_blocks, line_injection_change, merge_blocks, split_blocks, BlockKind, ContingencyBlocks,
    SparseColumn, LINE_Z,
};
pub use eliminate::{capture, eliminate, Fingerprint};
pub use scores::{
    filter_score, fingerprint_score, least_squares_residual, norm, observed_fingerprint,
    ObservationRows,
};
