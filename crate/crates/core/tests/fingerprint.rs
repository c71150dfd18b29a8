mod common;

use common::{random_solved, rel_diff, solved, tight};
use flier_core::acpf::{newton_solve, BorderedJacobian, SystemState};
use flier_core::fingerprint::{eliminate, filter_score, line_blocks, merge_blocks, split_blocks};
use flier_core::flier::{
    candidate_score, merge_pairs, precompute_observation_rows, predicted_observation,
    CandidateSet,
};
use flier_core::netmodel::{
    build_admittance, enumerate_splits, expand_to_breaker_model, observation_operator,
    PmuDeployment,
};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pmus(bus_ids: &[u64], k: usize, rng: &mut ChaCha8Rng) -> PmuDeployment {
    PmuDeployment::new(bus_ids.choose_multiple(rng, k).copied().collect())
}

fn assert_bound(tau: f64, t: f64) -> Result<(), TestCaseError> {
    prop_assert!(tau <= t * (1.0 + 1e-9) + 1e-15, "tau {tau:e} > t {t:e}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filter_score_never_exceeds_fingerprint_score(seed in any::<u64>(), buses in 4usize..14, k in 1usize..5) {
        let Some((net, pre)) = random_solved(seed, buses) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let model = net.flow_model();
        let jac = BorderedJacobian::new(&model, &pre).unwrap();
        let obs = observation_operator(&pmus(&net.bus_ids, k.min(net.n()), &mut rng), &net).unwrap();
        let rows = precompute_observation_rows(&jac, &obs);

        let mut set = CandidateSet::new();
        set.add_lines(&net, &model, &pre).unwrap();
        set.add_merges(&net, &model, &pre, &merge_pairs(&net)).unwrap();
        let observed: Vec<f64> = (0..obs.m()).map(|_| rng.random_range(-0.05..0.05)).collect();
        for cand in set.candidates.iter().skip(1) {
            let blocks = cand.blocks.as_ref().unwrap();
            let Ok(t) = candidate_score(&jac, &rows, blocks, &observed, None) else { continue };
            assert_bound(filter_score(&observed, &rows, blocks, None), t)?;
        }
    }

    #[test]
    fn split_filter_score_never_exceeds_fingerprint_score(seed in any::<u64>(), buses in 4usize..12) {
        let Some((net, pre)) = random_solved(seed, buses) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b);
        let bnet = expand_to_breaker_model(&net);
        let state = bnet.map_state(&pre);
        let Ok(jac) = BorderedJacobian::new(&bnet.model, &state) else { return Ok(()) };
        let obs = observation_operator(&pmus(&net.bus_ids, 2.min(net.n()), &mut rng), &bnet).unwrap();
        let rows = precompute_observation_rows(&jac, &obs);
        let observed: Vec<f64> = (0..obs.m()).map(|_| rng.random_range(-0.05..0.05)).collect();
        for split in enumerate_splits(&bnet) {
            let blocks = split_blocks(&bnet, &state, &split).unwrap();
            let Ok(t) = candidate_score(&jac, &rows, &blocks, &observed, None) else { continue };
            assert_bound(filter_score(&observed, &rows, &blocks, None), t)?;
        }
    }

    #[test]
    fn relabelling_buses_permutes_fingerprints(seed in any::<u64>(), buses in 4usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = flier_core::synth::random_case(&mut rng, &flier_core::synth::RandomNetworkSpec::with_buses(buses));
        let mut shuffled = case.clone();
        shuffled.buses.shuffle(&mut rng);
        shuffled.branches.reverse();

        let nb = case.branches.len();
        let fingerprints = |case: &flier_core::netmodel::RawCase, original: &dyn Fn(usize) -> usize| {
            let net = build_admittance(case).unwrap();
            let model = net.flow_model();
            let pre = newton_solve(&model, &SystemState::flat(model.n(), model.c()), &tight()).ok()?.state;
            let jac = BorderedJacobian::new(&model, &pre).ok()?;
            let obs = observation_operator(&PmuDeployment::new(net.bus_ids.clone()), &net).unwrap();
            let rows = precompute_observation_rows(&jac, &obs);
            let mut out = std::collections::BTreeMap::new();
            for b in net.in_service_branches() {
                let blocks = line_blocks(&model, &pre, &net.branch_outage_delta(b).unwrap()).unwrap();
                if let Ok(p) = predicted_observation(&jac, &rows, &blocks) {
                    out.insert(original(b), p);
                }
            }
            Some(out)
        };
        let (Some(a), Some(b)) = (fingerprints(&case, &|b| b), fingerprints(&shuffled, &|b| nb - 1 - b)) else { return Ok(()) };
        prop_assert_eq!(a.len(), b.len());
        for (branch, fa) in &a {
            let fb = &b[branch];
            prop_assert!(rel_diff(fa, fb) < 1e-8 || fa.iter().all(|v| v.abs() < 1e-12), "branch {branch}");
        }
    }
}

#[test]
fn precomputed_rows_agree_with_direct_elimination() {
    let net = common::network("case57");
    let pre = solved(&net);
    let model = net.flow_model();
    let jac = BorderedJacobian::new(&model, &pre).unwrap();
    let obs = observation_operator(&PmuDeployment::new(vec![4, 13, 34]), &net).unwrap();
    let rows = precompute_observation_rows(&jac, &obs);
    let mut checked = 0;
    for b in net.in_service_branches() {
        let blocks = line_blocks(&model, &pre, &net.branch_outage_delta(b).unwrap()).unwrap();
        let Ok(fp) = eliminate(&jac, &blocks) else { continue };
        let direct = fp.observed(&obs);
        let fast = predicted_observation(&jac, &rows, &blocks).unwrap();
        assert!(rel_diff(&fast, &direct) < 1e-9, "branch {b}");
        checked += 1;
    }
    for (a, b) in merge_pairs(&net).into_iter().take(20) {
        let blocks = merge_blocks(&model, &pre, a, b).unwrap();
        let direct = eliminate(&jac, &blocks).unwrap().observed(&obs);
        let fast = predicted_observation(&jac, &rows, &blocks).unwrap();
        assert!(rel_diff(&fast, &direct) < 1e-9);
    }
    assert!(checked >= 78);
}

#[test]
fn islanding_outage_is_degenerate() {
    let net = common::network("case57");
    let pre = solved(&net);
    let model = net.flow_model();
    let jac = BorderedJacobian::new(&model, &pre).unwrap();
    let radial = (0..net.branch_count())
        .find(|&b| net.branch_label(b) == "32-33")
        .unwrap();
    let blocks = line_blocks(&model, &pre, &net.branch_outage_delta(radial).unwrap()).unwrap();
    assert!(matches!(
        eliminate(&jac, &blocks),
        Err(flier_core::Error::Degenerate(_))
    ));
}

#[test]
fn merge_fingerprint_enforces_equal_voltages() {
    let net = common::network("case57");
    let pre = solved(&net);
    let model = net.flow_model();
    let jac = BorderedJacobian::new(&model, &pre).unwrap();
    let n = model.n();
    for (a, b) in merge_pairs(&net).into_iter().take(10) {
        let fp = eliminate(&jac, &merge_blocks(&model, &pre, a, b).unwrap()).unwrap();
        let dx = &fp.delta_x;
        assert!(((pre.theta[a] + dx[a]) - (pre.theta[b] + dx[b])).abs() < 1e-12);
        assert!(((pre.vmag[a] + dx[n + a]) - (pre.vmag[b] + dx[n + b])).abs() < 1e-12);
    }
}
