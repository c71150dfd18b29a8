use serde::Serialize;

use crate::acpf::SystemState;
use crate::error::Result;
use crate::fingerprint::{line_blocks, merge_blocks, split_blocks, ContingencyBlocks};
use crate::netmodel::{
    BreakerNetwork, BusBranchNetwork, BusType, FlowModel, SplitCandidate,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Contingency {
    #[serde(rename = "none")]
    NoChange,
    Line { branch: usize },
    Split { bus: usize, breakers: (usize, usize) },
    /// Nodes of the model the candidate was built on.
    Merge { a: usize, b: usize },
}

impl Contingency {
    pub fn kind(&self) -> &'static str {
        match self {
            Contingency::NoChange => "none",
            Contingency::Line { .. } => "line",
            Contingency::Split { .. } => "split",
            Contingency::Merge { .. } => "merge",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub contingency: Contingency,
    pub label: String,
    /// `None` only for the no-change hypothesis.
    pub blocks: Option<ContingencyBlocks>,
}

/// Hypotheses scored against one observation. Index 0 is always no change.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl Default for CandidateSet {
    fn default() -> Self {
        Self::new()
    }
}

impl CandidateSet {
    pub fn new() -> Self {
        Self {
            candidates: vec![Candidate {
                contingency: Contingency::NoChange,
                label: "no change".into(),
                blocks: None,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn position(&self, contingency: &Contingency) -> Option<usize> {
        self.candidates.iter().position(|c| &c.contingency == contingency)
    }

    pub fn push(&mut self, contingency: Contingency, label: String, blocks: ContingencyBlocks) {
        self.candidates.push(Candidate {
            contingency,
            label,
            blocks: Some(blocks),
        });
    }

    /// Every in-service branch of a bus-branch model.
    pub fn add_lines(&mut self, net: &BusBranchNetwork, model: &FlowModel, state: &SystemState) -> Result<()> {
        for branch in net.in_service_branches() {
            let delta = net.branch_outage_delta(branch)?;
            let blocks = line_blocks(model, state, &delta)?;
            self.push(Contingency::Line { branch }, net.branch_label(branch), blocks);
        }
        Ok(())
    }

    /// Every in-service branch, located on its end sections of a breaker model.
    pub fn add_breaker_lines(&mut self, net: &BusBranchNetwork, bnet: &BreakerNetwork, state: &SystemState) -> Result<()> {
        for branch in net.in_service_branches() {
            let delta = bnet.branch_outage_delta(net, branch)?;
            let blocks = line_blocks(&bnet.model, state, &delta)?;
            self.push(Contingency::Line { branch }, net.branch_label(branch), blocks);
        }
        Ok(())
    }

    pub fn add_splits(&mut self, bnet: &BreakerNetwork, state: &SystemState, splits: &[SplitCandidate]) -> Result<()> {
        for split in splits {
            let blocks = split_blocks(bnet, state, split)?;
            self.push(
                Contingency::Split {
                    bus: split.bus,
                    breakers: split.breakers,
                },
                bnet.split_label(split),
                blocks,
            );
        }
        Ok(())
    }

    /// Bus-pair merges of a bus-branch model; labels use external bus ids.
    pub fn add_merges(
        &mut self,
        net: &BusBranchNetwork,
        model: &FlowModel,
        state: &SystemState,
        pairs: &[(usize, usize)],
    ) -> Result<()> {
        for &(a, b) in pairs {
            let blocks = merge_blocks(model, state, a, b)?;
            self.push(
                Contingency::Merge { a, b },
                format!("merge {}+{}", net.bus_ids[a], net.bus_ids[b]),
                blocks,
            );
        }
        Ok(())
    }
}

/// Bus pairs joined by an in-service branch where at most one bus regulates
/// its voltage, ascending and without duplicates.
pub fn merge_pairs(net: &BusBranchNetwork) -> Vec<(usize, usize)> {
    let regulated = |b: usize| matches!(net.kinds[b], BusType::Slack | BusType::PV);
    let mut pairs: Vec<(usize, usize)> = net
        .in_service_branches()
        .map(|idx| {
            let br = &net.branches[idx];
            (br.from.min(br.to), br.from.max(br.to))
        })
        .filter(|&(a, b)| a != b && !(regulated(a) && regulated(b)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}
