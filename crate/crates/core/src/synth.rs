//! Seeded random test networks.

use rand::Rng;

use crate::netmodel::{
    build_admittance, BusBranchNetwork, BusType, RawBranch, RawBus, RawCase, RawGenerator,
};

#[derive(Debug, Clone)]
pub struct RandomNetworkSpec {
    pub buses: usize,
    /// Branches added on top of the spanning tree.
    pub extra_branches: usize,
    /// Probability that a branch is a transformer with off-nominal tap.
    pub transformer_fraction: f64,
    /// Phase shift range for transformers (radians).
    pub max_shift: f64,
    /// Angle spread of the random initial voltages (radians).
    pub angle_spread: f64,
    pub generators: usize,
}

impl RandomNetworkSpec {
    pub fn with_buses(n: usize) -> Self {
        Self {
            buses: n,
            extra_branches: n / 2 + 1,
            transformer_fraction: 0.3,
            max_shift: 0.1,
            angle_spread: 0.2,
            generators: (n / 3).max(1),
        }
    }
}

/// A connected random case; bus 1 is the slack.
pub fn random_case<R: Rng>(rng: &mut R, spec: &RandomNetworkSpec) -> RawCase {
    let n = spec.buses.max(2);
    let buses = (0..n)
        .map(|i| RawBus {
            id: i as u64 + 1,
            kind: if i == 0 {
                BusType::Slack
            } else if i < spec.generators {
                BusType::PV
            } else {
                BusType::PQ
            },
            pd: rng.random_range(0.0..0.5),
            qd: rng.random_range(-0.1..0.2),
            gs: if rng.random_bool(0.2) { rng.random_range(0.0..0.05) } else { 0.0 },
            bs: if rng.random_bool(0.2) { rng.random_range(-0.1..0.2) } else { 0.0 },
            vm: rng.random_range(0.95..1.05),
            va: rng.random_range(-spec.angle_spread..spec.angle_spread),
        })
        .collect();

    let generators = (0..spec.generators.min(n))
        .map(|i| RawGenerator {
            bus: i as u64 + 1,
            pg: rng.random_range(0.2..1.0),
            qg: 0.0,
            vset: rng.random_range(0.98..1.06),
            status: 1,
        })
        .collect();

    let branch = |rng: &mut R, from: usize, to: usize| {
        let transformer = rng.random_bool(spec.transformer_fraction);
        RawBranch {
            from: from as u64 + 1,
            to: to as u64 + 1,
            r: rng.random_range(0.0..0.05),
            x: rng.random_range(0.02..0.3),
            b_charge: rng.random_range(0.0..0.1),
            tap: if transformer { rng.random_range(0.9..1.1) } else { 1.0 },
            shift: if transformer && spec.max_shift > 0.0 {
                rng.random_range(-spec.max_shift..spec.max_shift)
            } else {
                0.0
            },
            status: 1,
        }
    };

    let mut branches = Vec::new();
    for i in 1..n {
        let parent = rng.random_range(0..i);
        branches.push(branch(rng, parent, i));
    }
    for _ in 0..spec.extra_branches {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        branches.push(branch(rng, a, b));
    }

    RawCase {
        base_mva: 100.0,
        buses,
        generators,
        branches,
    }
}

pub fn random_network<R: Rng>(rng: &mut R, spec: &RandomNetworkSpec) -> BusBranchNetwork {
    build_admittance(&random_case(rng, spec)).expect("random case is valid by construction")
}
