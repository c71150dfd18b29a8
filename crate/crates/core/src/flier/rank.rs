use std::time::Instant;

use serde::Serialize;

use super::candidates::CandidateSet;
use crate::acpf::{BorderedJacobian, SystemState};
use crate::error::{Error, Result};
use crate::fingerprint::{
    capture, filter_score, fingerprint_score, norm, observed_fingerprint, ContingencyBlocks,
    ObservationRows,
};
use crate::netmodel::{FlowModel, ObservationOperator};

/// Relative gap under which two fingerprint scores share a rank.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Stop once the best computed `t` is below the next `tau`.
    #[default]
    On,
    /// Compute every `t`.
    Off,
    /// Stop once the k-th smallest computed `t` is below the next `tau`.
    Lenient(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankOptions {
    pub filter: FilterMode,
    /// Diagonal weights on the observation rows.
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    /// Position in the candidate set.
    pub index: usize,
    pub kind: &'static str,
    pub id: String,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedDiagnosis {
    /// Computed candidates by `t`, then the rest by `tau`.
    pub candidates: Vec<RankedEntry>,
    /// Fingerprint evaluations attempted, the no-change hypothesis included.
    pub t_computed: usize,
    /// Seconds spent scoring.
    pub elapsed: f64,
    /// Number of candidates visited in `tau` order before stopping, when
    /// the scan ended early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped_at: Option<usize>,
}

impl RankedDiagnosis {
    pub fn top(&self) -> &RankedEntry {
        &self.candidates[0]
    }

    pub fn entry(&self, index: usize) -> Option<&RankedEntry> {
        self.candidates.iter().find(|e| e.index == index)
    }

    pub fn rank_of(&self, index: usize) -> Option<usize> {
        self.entry(index).map(|e| e.rank)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub change_detected: bool,
    pub diagnosis: RankedDiagnosis,
}

/// One transpose solve per observation row.
pub fn precompute_observation_rows(jac: &BorderedJacobian, obs: &ObservationOperator) -> ObservationRows {
    let dim = jac.dim();
    let units: Vec<Vec<f64>> = obs
        .rows
        .iter()
        .map(|&r| {
            let mut e = vec![0.0; dim];
            e[r] = 1.0;
            e
        })
        .collect();
    ObservationRows::from_rows(&jac.solve_transpose_many(&units))
}

/// Fingerprint score of one candidate; needs `p` solves with `A`.
pub fn candidate_score(
    jac: &BorderedJacobian,
    rows: &ObservationRows,
    blocks: &ContingencyBlocks,
    observed: &[f64],
    weights: Option<&[f64]>,
) -> Result<f64> {
    let predicted = predicted_observation(jac, rows, blocks)?;
    Ok(fingerprint_score(observed, &predicted, weights))
}

/// Observed fingerprint `E dv'` of one candidate.
pub fn predicted_observation(
    jac: &BorderedJacobian,
    rows: &ObservationRows,
    blocks: &ContingencyBlocks,
) -> Result<Vec<f64>> {
    let dim = jac.dim();
    let cols: Vec<Vec<f64>> = (0..blocks.p()).map(|j| blocks.dense_u(j, dim)).collect();
    let a_inv_u = jac.solve_many(&cols);
    let (_, w) = capture(blocks, &a_inv_u)?;
    Ok(observed_fingerprint(rows, blocks, &w))
}

fn weighted_norm(v: &[f64], weights: Option<&[f64]>) -> f64 {
    match weights {
        Some(w) => norm(&v.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<_>>()),
        None => norm(v),
    }
}

/// Filter, lazily score in ascending-`tau` order, stop early, and rank.
pub fn rank(
    observed: &[f64],
    set: &CandidateSet,
    rows: &ObservationRows,
    jac: &BorderedJacobian,
    options: &RankOptions,
) -> Result<RankedDiagnosis> {
    let start = Instant::now();
    if set.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if observed.len() != rows.m() {
        return Err(Error::Dimension(format!(
            "observation has {} entries, operator has {} rows",
            observed.len(),
            rows.m()
        )));
    }
    if let Some(w) = &options.weights {
        if w.len() != rows.m() {
            return Err(Error::Dimension(format!(
                "{} weights for {} observation rows",
                w.len(),
                rows.m()
            )));
        }
    }
    let weights = options.weights.as_deref();
    let baseline = weighted_norm(observed, weights);

    let taus: Vec<f64> = set
        .candidates
        .iter()
        .map(|c| match &c.blocks {
            None => baseline,
            Some(b) => filter_score(observed, rows, b, weights),
        })
        .collect();
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]).then(a.cmp(&b)));

    let keep = match options.filter {
        FilterMode::On => Some(1),
        FilterMode::Lenient(k) => Some(k.max(1)),
        FilterMode::Off => None,
    };
    let mut t: Vec<Option<f64>> = vec![None; set.len()];
    let mut notes: Vec<Option<String>> = vec![None; set.len()];
    let mut known: Vec<f64> = Vec::new();
    let mut t_computed = 0;
    let mut stopped_at = None;

    for (pos, &idx) in order.iter().enumerate() {
        t_computed += 1;
        let score = match &set.candidates[idx].blocks {
            None => Ok(baseline),
            Some(b) => candidate_score(jac, rows, b, observed, weights),
        };
        match score {
            Ok(v) => {
                t[idx] = Some(v);
                let at = known.partition_point(|&x| x <= v);
                known.insert(at, v);
            }
            Err(Error::Degenerate(msg)) => notes[idx] = Some(format!("degenerate: {msg}")),
            Err(e) => return Err(e),
        }
        if let (Some(k), Some(&next)) = (keep, order.get(pos + 1)) {
            if known.len() >= k && known[k - 1] < taus[next] {
                stopped_at = Some(pos + 1);
                break;
            }
        }
    }

    let mut computed: Vec<usize> = (0..set.len()).filter(|&i| t[i].is_some()).collect();
    computed.sort_by(|&a, &b| t[a].unwrap().total_cmp(&t[b].unwrap()).then(a.cmp(&b)));
    let mut rest: Vec<usize> = (0..set.len()).filter(|&i| t[i].is_none()).collect();
    rest.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]).then(a.cmp(&b)));

    let mut candidates = Vec::with_capacity(set.len());
    let mut prev: Option<(f64, usize)> = None;
    for (pos, &idx) in computed.iter().chain(&rest).enumerate() {
        let rank = match (t[idx], prev) {
            (Some(v), Some((pv, pr))) if v - pv <= TIE_TOL * v.abs() + 1e-15 => pr,
            _ => pos + 1,
        };
        prev = t[idx].map(|v| (v, rank));
        let cand = &set.candidates[idx];
        candidates.push(RankedEntry {
            index: idx,
            kind: cand.contingency.kind(),
            id: cand.label.clone(),
            tau: taus[idx],
            t: t[idx],
            rank,
            note: notes[idx].take(),
        });
    }

    Ok(RankedDiagnosis {
        candidates,
        t_computed,
        elapsed: start.elapsed().as_secs_f64(),
        stopped_at,
    })
}

/// Ranks and reports whether anything other than no change came out on top.
pub fn detect(
    observed: &[f64],
    set: &CandidateSet,
    rows: &ObservationRows,
    jac: &BorderedJacobian,
    options: &RankOptions,
) -> Result<Detection> {
    let diagnosis = rank(observed, set, rows, jac, options)?;
    Ok(Detection {
        change_detected: diagnosis.top().kind != "none",
        diagnosis,
    })
}

/// Factorization and observation rows shared by every scan at one
/// pre-event state.
#[derive(Debug)]
pub struct Flier {
    pub jacobian: BorderedJacobian,
    pub observation: ObservationOperator,
    pub rows: ObservationRows,
}

impl Flier {
    pub fn new(model: &FlowModel, state: &SystemState, observation: ObservationOperator) -> Result<Self> {
        let jacobian = BorderedJacobian::new(model, state)?;
        Ok(Self::from_jacobian(jacobian, observation))
    }

    pub fn from_jacobian(jacobian: BorderedJacobian, observation: ObservationOperator) -> Self {
        let rows = precompute_observation_rows(&jacobian, &observation);
        Self {
            jacobian,
            observation,
            rows,
        }
    }

    pub fn rank(&self, observed: &[f64], set: &CandidateSet, options: &RankOptions) -> Result<RankedDiagnosis> {
        rank(observed, set, &self.rows, &self.jacobian, options)
    }

    pub fn detect(&self, observed: &[f64], set: &CandidateSet, options: &RankOptions) -> Result<Detection> {
        detect(observed, set, &self.rows, &self.jacobian, options)
    }
}
