use serde::{Deserialize, Serialize};

use super::admittance::BusBranchNetwork;
use super::breaker::BreakerNetwork;
use crate::error::{Error, Result};

/// Buses carrying a PMU, by external bus id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmuDeployment {
    pub buses: Vec<u64>,
}

impl PmuDeployment {
    pub fn new(mut buses: Vec<u64>) -> Self {
        buses.sort_unstable();
        buses.dedup();
        Self { buses }
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }
}

/// A model whose voltage nodes can host PMUs.
pub trait PmuSite {
    /// Number of voltage nodes (buses or sections).
    fn node_count(&self) -> usize;
    /// Node observed by a PMU at the bus with this external id.
    fn observed_node(&self, bus_id: u64) -> Option<usize>;
}

impl PmuSite for BusBranchNetwork {
    fn node_count(&self) -> usize {
        self.n()
    }

    fn observed_node(&self, bus_id: u64) -> Option<usize> {
        self.index_of(bus_id)
    }
}

impl PmuSite for BreakerNetwork {
    fn node_count(&self) -> usize {
        self.section_count()
    }

    fn observed_node(&self, bus_id: u64) -> Option<usize> {
        let bus = self.bus_ids.iter().position(|&b| b == bus_id)?;
        Some(self.master(bus))
    }
}

/// The selector `Ē = [E 0]`: two rows per PMU, angle then magnitude.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationOperator {
    /// State index picked by each row.
    pub rows: Vec<usize>,
    /// Bus id behind each pair of rows.
    pub buses: Vec<u64>,
}

impl ObservationOperator {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|&r| x[r]).collect()
    }

    /// Observed part of a voltage difference given as `(dtheta, d|v|)`.
    pub fn apply_voltage(&self, dtheta: &[f64], dvmag: &[f64]) -> Vec<f64> {
        let n = dtheta.len();
        self.rows
            .iter()
            .map(|&r| if r < n { dtheta[r] } else { dvmag[r - n] })
            .collect()
    }
}

pub fn observation_operator<S: PmuSite>(
    deployment: &PmuDeployment,
    site: &S,
) -> Result<ObservationOperator> {
    let n = site.node_count();
    let mut rows = Vec::with_capacity(2 * deployment.len());
    let mut buses = Vec::with_capacity(deployment.len());
    for &id in &deployment.buses {
        let node = site.observed_node(id).ok_or(Error::UnknownBus(id))?;
        rows.push(node);
        rows.push(n + node);
        buses.push(id);
    }
    Ok(ObservationOperator { rows, buses })
}
