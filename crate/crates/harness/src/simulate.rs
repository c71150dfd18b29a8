//! Ground-truth post-event states from the nonlinear solver.

use flier_core::acpf::{newton_solve, NewtonOptions, SystemState};
use flier_core::netmodel::{
    Admittance, BreakerNetwork, BusBranchNetwork, BusType, SectionElement, SplitCandidate,
};
use flier_core::Result;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    NoChange,
    Line(usize),
    Split(SplitCandidate),
    /// Bus indices; the second bus is folded into the first.
    Merge(usize, usize),
}

/// Solved post-event network, with a map from pre-event buses to post-event buses.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub network: BusBranchNetwork,
    pub state: SystemState,
    pub bus_map: Vec<usize>,
    pub iterations: usize,
}

impl Simulated {
    /// `(dtheta, d|v|)` per pre-event bus.
    pub fn voltage_delta(&self, pre: &SystemState) -> (Vec<f64>, Vec<f64>) {
        let dtheta = self
            .bus_map
            .iter()
            .zip(&pre.theta)
            .map(|(&b, t)| self.state.theta[b] - t)
            .collect();
        let dvmag = self
            .bus_map
            .iter()
            .zip(&pre.vmag)
            .map(|(&b, v)| self.state.vmag[b] - v)
            .collect();
        (dtheta, dvmag)
    }
}

/// Applies the event to the bus-branch network and solves the result,
/// starting from the pre-event voltages. Injections stay fixed.
pub fn simulate_event(
    net: &BusBranchNetwork,
    bnet: Option<&BreakerNetwork>,
    pre: &SystemState,
    event: &Event,
    options: &NewtonOptions,
) -> Result<Simulated> {
    let identity: Vec<usize> = (0..net.n()).collect();
    // origin[b]: the pre-event bus whose voltage seeds post-event bus b
    let (network, bus_map, origin) = match event {
        Event::NoChange => (net.clone(), identity.clone(), identity),
        Event::Line(branch) => (line_removed(net, *branch)?, identity.clone(), identity),
        Event::Split(split) => {
            let bnet = bnet.ok_or_else(|| {
                flier_core::Error::Validation("split events need a breaker model".into())
            })?;
            let mut origin = identity.clone();
            origin.push(split.bus);
            (split_network(net, bnet, split), identity, origin)
        }
        Event::Merge(a, b) => {
            let (network, bus_map) = merge_network(net, *a, *b);
            let origin = (0..net.n()).filter(|&x| x != *b).collect();
            (network, bus_map, origin)
        }
    };
    let model = network.flow_model();
    let initial = SystemState {
        theta: origin.iter().map(|&o| pre.theta[o]).collect(),
        vmag: origin.iter().map(|&o| pre.vmag[o]).collect(),
        lambda: vec![0.0; model.c()],
    };
    let report = newton_solve(&model, &initial, options)?;
    Ok(Simulated {
        network,
        state: report.state,
        bus_map,
        iterations: report.iterations,
    })
}

fn line_removed(net: &BusBranchNetwork, branch: usize) -> Result<BusBranchNetwork> {
    let delta = net.branch_outage_delta(branch)?;
    let mut out = net.clone();
    out.y.apply(&delta);
    out.branches[branch].in_service = false;
    Ok(out)
}

/// Reassembles `y` and the injection vector from per-bus data and branches.
fn reassemble(net: &mut BusBranchNetwork) {
    let n = net.n();
    let mut y = Admittance::new(n);
    for b in 0..n {
        y.add(b, b, net.shunt[b]);
    }
    for br in net.branches.iter_mut() {
        br.block.i = br.from;
        br.block.k = br.to;
        if br.in_service {
            y.apply(&br.block);
        }
    }
    net.y = y;
    let mut inj = vec![0.0; 2 * n];
    for b in 0..n {
        let s = net.generation[b] - net.load[b];
        inj[b] = s.re;
        inj[n + b] = s.im;
    }
    net.injections = inj;
}

/// Clones the split bus: the new bus (appended last) takes the breakaway
/// branch ends, load and generation. Voltage control moves with the
/// generator.
pub fn split_network(net: &BusBranchNetwork, bnet: &BreakerNetwork, split: &SplitCandidate) -> BusBranchNetwork {
    let bus = split.bus;
    let master = bnet.master(bus);
    let ring = &bnet.rings[bus];
    let group: Vec<usize> = if split.breakaway.contains(&master) {
        ring.iter().copied().filter(|s| !split.breakaway.contains(s)).collect()
    } else {
        split.breakaway.clone()
    };

    let mut out = net.clone();
    let new = out.n();
    let new_id = net.bus_ids.iter().max().copied().unwrap_or(0) + 1;
    out.bus_ids.push(new_id);
    out.kinds.push(BusType::PQ);
    out.load.push(Complex64::default());
    out.generation.push(Complex64::default());
    out.has_generator.push(false);
    out.shunt.push(Complex64::default());
    out.vset.push(None);
    out.initial_vm.push(net.initial_vm[bus]);
    out.initial_va.push(net.initial_va[bus]);

    for &s in &group {
        match bnet.sections[s].element {
            SectionElement::BranchEnd { branch, .. } => {
                let br = &mut out.branches[branch];
                if br.from == bus {
                    br.from = new;
                } else {
                    br.to = new;
                }
            }
            SectionElement::Load => {
                out.load[new] = out.load[bus];
                out.load[bus] = Complex64::default();
            }
            SectionElement::Generator => {
                out.generation[new] = out.generation[bus];
                out.generation[bus] = Complex64::default();
                out.has_generator[new] = true;
                out.has_generator[bus] = false;
                out.kinds[new] = out.kinds[bus];
                out.kinds[bus] = BusType::PQ;
                out.vset[new] = out.vset[bus];
                out.vset[bus] = None;
                if out.slack == bus {
                    out.slack = new;
                }
            }
            SectionElement::Empty => {}
        }
    }
    reassemble(&mut out);
    out
}

/// Folds bus `b` into bus `a`. Branches joining them become a shunt on the
/// merged bus; the returned map sends both to the merged index.
pub fn merge_network(net: &BusBranchNetwork, a: usize, b: usize) -> (BusBranchNetwork, Vec<usize>) {
    let n = net.n();
    let bus_map: Vec<usize> = (0..n)
        .map(|x| {
            let x = if x == b { a } else { x };
            if x > b {
                x - 1
            } else {
                x
            }
        })
        .collect();
    let keep: Vec<usize> = (0..n).filter(|&x| x != b).collect();

    let mut out = net.clone();
    out.bus_ids = keep.iter().map(|&x| net.bus_ids[x]).collect();
    out.initial_vm = pick(&net.initial_vm, &keep);
    out.initial_va = pick(&net.initial_va, &keep);

    let ma = bus_map[a];
    let regulated = |k: BusType| matches!(k, BusType::Slack | BusType::PV);
    let mut kinds = pick(&net.kinds, &keep);
    let mut vset = pick(&net.vset, &keep);
    kinds[ma] = match (net.kinds[a], net.kinds[b]) {
        (BusType::Slack, _) | (_, BusType::Slack) => BusType::Slack,
        (BusType::PV, _) | (_, BusType::PV) => BusType::PV,
        _ => BusType::PQ,
    };
    if !regulated(net.kinds[a]) && regulated(net.kinds[b]) {
        vset[ma] = net.vset[b];
    }
    out.kinds = kinds;
    out.vset = vset;
    out.slack = bus_map[net.slack];

    let mut load = pick(&net.load, &keep);
    let mut generation = pick(&net.generation, &keep);
    let mut has_generator = pick(&net.has_generator, &keep);
    let mut shunt = pick(&net.shunt, &keep);
    load[ma] += net.load[b];
    generation[ma] += net.generation[b];
    has_generator[ma] |= net.has_generator[b];
    shunt[ma] += net.shunt[b];

    for br in out.branches.iter_mut() {
        let joins = (br.from == a && br.to == b) || (br.from == b && br.to == a);
        if joins && br.in_service {
            let blk = br.block;
            shunt[ma] += blk.ii + blk.ik + blk.ki + blk.kk;
            br.in_service = false;
        }
        br.from = bus_map[br.from];
        br.to = bus_map[br.to];
    }
    out.load = load;
    out.generation = generation;
    out.has_generator = has_generator;
    out.shunt = shunt;
    reassemble(&mut out);
    (out, bus_map)
}

fn pick<T: Copy>(v: &[T], keep: &[usize]) -> Vec<T> {
    keep.iter().map(|&x| v[x]).collect()
}
