use std::path::PathBuf;

use flier_core::acpf::power_injections;
use flier_core::netmodel::{
    enumerate_splits, expand_to_breaker_model, BusBranchNetwork, BusType, SectionElement,
};
use flier_harness::simulate::{simulate_event, Event};
use flier_harness::sweep::{load_network, newton_options, solve_base};

fn case57() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/case57.m")
}

#[test]
fn no_change_leaves_voltages_alone() {
    let net = load_network(&case57()).unwrap();
    let pre = solve_base(&net).unwrap();
    let sim = simulate_event(&net, None, &pre, &Event::NoChange, &newton_options()).unwrap();
    let (dt, dv) = sim.voltage_delta(&pre);
    assert!(dt.iter().chain(&dv).all(|d| d.abs() < 1e-12));
}

/// Line removal plus the open-ended branch seen from its far end.
fn dangling_line_network(net: &BusBranchNetwork, branch: usize, open_end: usize) -> BusBranchNetwork {
    let br = &net.branches[branch];
    let b = br.block;
    let (y_oo, y_of, y_fo, y_ff, far) = if open_end == br.from {
        (b.ii, b.ik, b.ki, b.kk, br.to)
    } else {
        (b.kk, b.ki, b.ik, b.ii, br.from)
    };
    let mut out = net.clone();
    out.y.apply(&net.branch_outage_delta(branch).unwrap());
    out.y.add(far, far, y_ff - y_fo * y_of / y_oo);
    out.branches[branch].in_service = false;
    out
}

#[test]
fn single_branch_split_equals_line_removal() {
    let net = load_network(&case57()).unwrap();
    let pre = solve_base(&net).unwrap();
    let bnet = expand_to_breaker_model(&net);
    let (mut compared, mut uncharged) = (0, 0);
    for split in enumerate_splits(&bnet) {
        let [s] = split.breakaway[..] else { continue };
        let SectionElement::BranchEnd { branch, .. } = bnet.sections[s].element else {
            continue;
        };
        let Ok(a) = simulate_event(&net, Some(&bnet), &pre, &Event::Split(split.clone()), &newton_options()) else {
            continue;
        };
        let expected = dangling_line_network(&net, branch, split.bus);
        let b = simulate_event(&expected, None, &pre, &Event::NoChange, &newton_options()).unwrap();
        let (at, av) = a.voltage_delta(&pre);
        let (bt, bv) = b.voltage_delta(&pre);
        let worst = at.iter().zip(&bt).chain(av.iter().zip(&bv)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(worst < 1e-8, "split {}: {worst:e}", bnet.split_label(&split));
        compared += 1;

        let blk = net.branches[branch].block;
        if (blk.ii + blk.ik).norm() < 1e-12 && (blk.kk + blk.ki).norm() < 1e-12 {
            let c = simulate_event(&net, None, &pre, &Event::Line(branch), &newton_options()).unwrap();
            let (ct, cv) = c.voltage_delta(&pre);
            let worst = at.iter().zip(&ct).chain(av.iter().zip(&cv)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(worst < 1e-8, "uncharged {}: {worst:e}", bnet.split_label(&split));
            uncharged += 1;
        }
    }
    assert!(compared > 100 && uncharged > 0, "{compared} {uncharged}");
}

#[test]
fn line_outages_hold_injections_fixed() {
    let net = load_network(&case57()).unwrap();
    let pre = solve_base(&net).unwrap();
    let n = net.n();
    for branch in net.in_service_branches() {
        let Ok(sim) = simulate_event(&net, None, &pre, &Event::Line(branch), &newton_options()) else {
            continue;
        };
        let h = power_injections(&sim.network.y, &sim.state.theta, &sim.state.vmag);
        for b in 0..n {
            if net.kinds[b] != BusType::Slack {
                assert!((h[b] - net.injections[b]).abs() < 1e-8);
            }
            if net.kinds[b] == BusType::PQ {
                assert!((h[n + b] - net.injections[n + b]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn ieee57_admits_78_line_events() {
    let net = load_network(&case57()).unwrap();
    let pre = solve_base(&net).unwrap();
    let ok = net
        .in_service_branches()
        .filter(|&b| simulate_event(&net, None, &pre, &Event::Line(b), &newton_options()).is_ok())
        .count();
    assert_eq!(net.in_service_branches().count(), 80);
    assert_eq!(ok, 78);
}

#[test]
fn merged_buses_share_one_voltage() {
    let net = load_network(&case57()).unwrap();
    let pre = solve_base(&net).unwrap();
    for (a, b) in flier_core::flier::merge_pairs(&net).into_iter().take(15) {
        let Ok(sim) = simulate_event(&net, None, &pre, &Event::Merge(a, b), &newton_options()) else {
            continue;
        };
        assert_eq!(sim.network.n(), net.n() - 1);
        assert_eq!(sim.bus_map[a], sim.bus_map[b]);
        let total = |inj: &[f64], m: usize| inj[..m].iter().sum::<f64>();
        assert!((total(&sim.network.injections, net.n() - 1) - total(&net.injections, net.n())).abs() < 1e-12);
    }
}
