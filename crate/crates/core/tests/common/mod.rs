#![allow(dead_code)]

use flier_core::acpf::{newton_solve, CsrMatrix, NewtonOptions, SystemState};
use flier_core::netmodel::{build_admittance, parse_case, BusBranchNetwork, RawCase};
use flier_core::synth::{random_network, RandomNetworkSpec};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn raw_case(name: &str) -> RawCase {
    let path = format!("{}/../../data/{name}.m", env!("CARGO_MANIFEST_DIR"));
    parse_case(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn network(name: &str) -> BusBranchNetwork {
    build_admittance(&raw_case(name)).unwrap()
}

pub fn tight() -> NewtonOptions {
    NewtonOptions {
        tolerance: 1e-11,
        ..NewtonOptions::default()
    }
}

pub fn solved(net: &BusBranchNetwork) -> SystemState {
    let model = net.flow_model();
    let start = SystemState {
        theta: net.initial_va.clone(),
        vmag: net.initial_vm.clone(),
        lambda: vec![0.0; model.c()],
    };
    newton_solve(&model, &start, &tight()).unwrap().state
}

/// A random network with a converged base case, or `None`.
pub fn random_solved(seed: u64, buses: usize) -> Option<(BusBranchNetwork, SystemState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_network(&mut rng, &RandomNetworkSpec::with_buses(buses));
    let model = net.flow_model();
    let state = newton_solve(&model, &SystemState::flat(model.n(), model.c()), &tight())
        .ok()?
        .state;
    Some((net, state))
}

pub fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.entries() {
        out[(r, c)] += v;
    }
    out
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let s: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / s.max(f64::MIN_POSITIVE)
}
