mod common;

use std::collections::BTreeSet;

use common::{network, raw_case, solved};
use flier_core::netmodel::{
    build_admittance, enumerate_splits, expand_to_breaker_model, observation_operator,
    BreakerNetwork, PmuDeployment,
};
use flier_core::synth::{random_case, RandomNetworkSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `Y = Cf^T Yf + Ct^T Yt + diag(Ysh)` from branch admittances written out directly.
fn incidence_ybus(case: &flier_core::netmodel::RawCase) -> Vec<Vec<Complex64>> {
    let n = case.buses.len();
    let idx = |id: u64| case.buses.iter().position(|b| b.id == id).unwrap();
    let mut y = vec![vec![Complex64::default(); n]; n];
    for (i, b) in case.buses.iter().enumerate() {
        y[i][i] += Complex64::new(b.gs, b.bs);
    }
    for br in case.branches.iter().filter(|b| b.status != 0) {
        let (f, t) = (idx(br.from), idx(br.to));
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let bc = Complex64::new(0.0, br.b_charge / 2.0);
        let a = Complex64::new(br.tap * br.shift.cos(), br.tap * br.shift.sin());
        let yf = [(ys + bc) / (a * a.conj()), -ys / a.conj()];
        let yt = [-ys / a, ys + bc];
        y[f][f] += yf[0];
        y[f][t] += yf[1];
        y[t][f] += yt[0];
        y[t][t] += yt[1];
    }
    y
}

#[test]
fn ybus_matches_incidence_assembly() {
    for name in ["case9", "case57", "case118"] {
        let case = raw_case(name);
        let net = build_admittance(&case).unwrap();
        let expect = incidence_ybus(&case);
        let got = net.y.to_dense();
        let mut worst = 0.0f64;
        for (er, gr) in expect.iter().zip(&got) {
            for (e, g) in er.iter().zip(gr) {
                worst = worst.max((e - g).norm() / (1.0 + e.norm()));
            }
        }
        assert!(worst < 1e-12, "{name}: {worst:e}");
    }
}

#[test]
fn outage_delta_matches_rebuilt_network() {
    let case = raw_case("case57");
    let net = build_admittance(&case).unwrap();
    for b in net.in_service_branches() {
        let mut y = net.y.clone();
        y.apply(&net.branch_outage_delta(b).unwrap());
        let mut without = case.clone();
        without.branches[b].status = 0;
        let rebuilt = build_admittance(&without).unwrap().y.to_dense();
        for (r, row) in rebuilt.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!((y.get(r, c) - v).norm() < 1e-10, "branch {b} entry ({r},{c})");
            }
        }
    }
}

#[test]
fn mapped_state_solves_breaker_model() {
    for (name, tol) in [("case9", 1e-10), ("case57", 1e-9), ("case118", 1e-9)] {
        let net = network(name);
        let pre = solved(&net);
        let bnet = expand_to_breaker_model(&net);
        let state = bnet.map_state(&pre);
        let residual = bnet.model.mismatch(&state).unwrap();
        let worst = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        assert!(worst < tol, "{name}: residual {worst:e}");
    }
}

#[test]
fn breaker_model_sizes() {
    let net = network("case57");
    let bnet = expand_to_breaker_model(&net);
    let sections: usize = bnet.rings.iter().map(Vec::len).sum();
    assert_eq!(sections, bnet.section_count());
    assert_eq!(bnet.bus_count(), 57);
    // every non-master section is tied in angle and magnitude
    let ties = bnet.ties.iter().filter(|t| t.is_some()).count();
    assert_eq!(ties, bnet.section_count() - 57);
}

#[test]
fn observation_rows_pick_angle_then_magnitude() {
    let net = network("case57");
    let obs = observation_operator(&PmuDeployment::new(vec![34, 4, 13]), &net).unwrap();
    let n = net.n();
    let i4 = net.index_of(4).unwrap();
    assert_eq!(obs.buses, vec![4, 13, 34]);
    assert_eq!(&obs.rows[..2], &[i4, n + i4]);
    assert!(observation_operator(&PmuDeployment::new(vec![999]), &net).is_err());

    let bnet = expand_to_breaker_model(&net);
    let bobs = observation_operator(&PmuDeployment::new(vec![4]), &bnet).unwrap();
    assert_eq!(bobs.rows[0], bnet.master(i4));
}

/// Every split as a set: the side without the master, per bus.
fn brute_force_splits(bnet: &BreakerNetwork) -> BTreeSet<(usize, Vec<usize>)> {
    let mut out = BTreeSet::new();
    for (bus, ring) in bnet.rings.iter().enumerate() {
        let d = ring.len();
        for mask in 1u32..(1 << d) - 1 {
            if mask & 1 != 0 {
                continue; // contains the master
            }
            let inside = |j: usize| mask & (1 << (j % d)) != 0;
            let starts = (0..d).filter(|&j| inside(j) && !inside(j + d - 1)).count();
            if starts != 1 {
                continue;
            }
            let group: Vec<usize> = (0..d).filter(|&j| inside(j)).map(|j| ring[j]).collect();
            let rest: Vec<usize> = (0..d).filter(|&j| !inside(j)).map(|j| ring[j]).collect();
            let isolates = |g: &[usize]| {
                g.iter().any(|&s| bnet.sections[s].element.is_injection())
                    && !g.iter().any(|&s| bnet.sections[s].element.is_branch())
            };
            if isolates(&group) || isolates(&rest) {
                continue;
            }
            let mut group = group;
            group.sort_unstable();
            out.insert((bus, group));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_enumeration_is_every_contiguous_arc(seed in any::<u64>(), buses in 3usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = build_admittance(&random_case(&mut rng, &RandomNetworkSpec::with_buses(buses))).unwrap();
        let bnet = expand_to_breaker_model(&net);
        let splits = enumerate_splits(&bnet);
        let got: BTreeSet<(usize, Vec<usize>)> =
            splits.iter().map(|s| (s.bus, s.breakaway.clone())).collect();
        prop_assert_eq!(got.len(), splits.len());
        prop_assert_eq!(got, brute_force_splits(&bnet));
    }
}
