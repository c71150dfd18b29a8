//! Candidate sets and the filtered ranking scan.

mod candidates;
mod rank;

pub use candidates::{merge_pairs, Candidate, CandidateSet, Contingency};
pub use rank::{
    candidate_score, detect, precompute_observation_rows, predicted_observation, rank, Detection,
    FilterMode, Flier, RankOptions, RankedDiagnosis, RankedEntry,
};
