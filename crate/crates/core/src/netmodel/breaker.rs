//! Breaker-level expansion: every bus becomes a ring substation.
//!
//! Each attached element (branch end, aggregated load, aggregated generation)
//! gets its own bus section, and adjacent sections on the ring are joined by
//! a breaker. Ring order is branch ends ascending by neighbour bus id (parallel
//! branches by branch index), then the load section, then the generator
//! section; the first section is the master and carries the bus shunt.
//! Every other section is tied to the master by an angle and a magnitude
//! constraint. Slack and PV rows sit on the generator section, or on the
//! master when the bus has none.

use std::fmt;

use num_complex::Complex64;

use super::admittance::{Admittance, BusBranchNetwork, DeltaY};
use super::case::BusType;
use super::model::{Component, Constraint, ConstraintKind, FlowModel};
use crate::acpf::{power_injections, SystemState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionElement {
    BranchEnd { branch: usize, neighbor: usize },
    Load,
    Generator,
    /// A bus with no attached elements still owns one section.
    Empty,
}

impl SectionElement {
    pub fn is_branch(&self) -> bool {
        matches!(self, SectionElement::BranchEnd { .. })
    }

    pub fn is_injection(&self) -> bool {
        matches!(self, SectionElement::Load | SectionElement::Generator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Section {
    pub bus: usize,
    pub element: SectionElement,
}

/// Two opened breakers on one ring and the group of sections they cut loose.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplitCandidate {
    pub bus: usize,
    /// Ring positions of the opened breakers, `first < second`. Breaker `p`
    /// sits between ring positions `p` and `p + 1` (mod ring length).
    pub breakers: (usize, usize),
    /// Sections on the arc that does not contain the master, ascending.
    pub breakaway: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BreakerNetwork {
    pub sections: Vec<Section>,
    /// Per bus, section indices in ring order; `rings[b][0]` is the master.
    pub rings: Vec<Vec<usize>>,
    pub model: FlowModel,
    /// Per section, the `(angle, magnitude)` tie columns binding it to its master.
    pub ties: Vec<Option<(usize, usize)>>,
    /// Per branch, the `(from, to)` sections of an in-service branch.
    pub branch_sections: Vec<Option<(usize, usize)>>,
    pub bus_ids: Vec<u64>,
    /// Bus-branch injections per bus, kept for describing elements.
    pub bus_load: Vec<Complex64>,
}

impl BreakerNetwork {
    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn bus_count(&self) -> usize {
        self.rings.len()
    }

    pub fn master(&self, bus: usize) -> usize {
        self.rings[bus][0]
    }

    pub fn breaker_count(&self) -> usize {
        self.rings.iter().map(|r| if r.len() > 1 { r.len() } else { 0 }).sum()
    }

    pub fn section_label(&self, s: usize) -> String {
        let sec = self.sections[s];
        let bus = self.bus_ids[sec.bus];
        match sec.element {
            SectionElement::BranchEnd { branch, neighbor } => {
                format!("{bus}:br{branch}->{}", self.bus_ids[neighbor])
            }
            SectionElement::Load => format!("{bus}:load"),
            SectionElement::Generator => format!("{bus}:gen"),
            SectionElement::Empty => format!("{bus}:empty"),
        }
    }

    pub fn split_label(&self, split: &SplitCandidate) -> String {
        let parts: Vec<String> = split
            .breakaway
            .iter()
            .map(|&s| self.section_label(s))
            .collect();
        format!(
            "split {} [{}]",
            self.bus_ids[split.bus],
            parts.join(" ")
        )
    }

    /// Outage block of a branch expressed on its two end sections.
    pub fn branch_outage_delta(&self, net: &BusBranchNetwork, branch: usize) -> Result<DeltaY> {
        let delta = net.branch_outage_delta(branch)?;
        let (sf, st) = self.branch_sections[branch].ok_or(Error::BranchOutOfService(branch))?;
        Ok(delta.relocated(sf, st))
    }

    /// Maps a bus-branch state onto sections (every section takes its bus
    /// voltage) and recovers the multipliers so the section-level equations
    /// hold at that state.
    pub fn map_state(&self, bus_state: &SystemState) -> SystemState {
        let ns = self.section_count();
        let theta: Vec<f64> = self.sections.iter().map(|s| bus_state.theta[s.bus]).collect();
        let vmag: Vec<f64> = self.sections.iter().map(|s| bus_state.vmag[s.bus]).collect();
        let h = power_injections(&self.model.y, &theta, &vmag);
        // r = s - H per section and component
        let r: Vec<f64> = self.model.injections.iter().zip(&h).map(|(s, h)| s - h).collect();
        let mut lambda = vec![0.0; self.model.c()];

        // boundary column and node per (bus, component)
        let mut boundary: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; self.bus_count()];
        for (k, con) in self.model.constraints.iter().enumerate() {
            if let ConstraintKind::Fixed { node, component } = con.kind {
                boundary[self.sections[node].bus][comp_slot(component)] = Some((k, node));
            }
        }

        for (bus, ring) in self.rings.iter().enumerate() {
            let master = ring[0];
            for component in [Component::Angle, Component::Magnitude] {
                let slot = comp_slot(component);
                let off = if slot == 0 { 0 } else { ns };
                let tie_col = |s: usize| {
                    let (a, m) = self.ties[s].expect("slave section without tie");
                    if slot == 0 {
                        a
                    } else {
                        m
                    }
                };
                let bnd = boundary[bus][slot];
                let bnd_node = bnd.map(|(_, node)| node);
                let mut sum_ties = 0.0;
                for &s in &ring[1..] {
                    if Some(s) == bnd_node {
                        continue;
                    }
                    lambda[tie_col(s)] = r[off + s];
                    sum_ties += r[off + s];
                }
                match bnd {
                    None => {}
                    Some((k, node)) if node == master => {
                        lambda[k] = r[off + master] + sum_ties;
                    }
                    Some((k, node)) => {
                        let tie = -r[off + master] - sum_ties;
                        lambda[tie_col(node)] = tie;
                        lambda[k] = r[off + node] - tie;
                    }
                }
            }
        }
        SystemState { theta, vmag, lambda }
    }

    /// Section values of the bus voltages seen at each master.
    pub fn master_sections(&self) -> Vec<usize> {
        self.rings.iter().map(|r| r[0]).collect()
    }
}

fn comp_slot(c: Component) -> usize {
    match c {
        Component::Angle => 0,
        Component::Magnitude => 1,
    }
}

impl fmt::Display for SplitCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bus {} breakers {}/{}", self.bus, self.breakers.0, self.breakers.1)
    }
}

/// Expands every bus into a ring substation.
pub fn expand_to_breaker_model(net: &BusBranchNetwork) -> BreakerNetwork {
    let n = net.n();
    let mut sections = Vec::new();
    let mut rings = vec![Vec::new(); n];
    let mut branch_sections = vec![None; net.branches.len()];

    let mut ends: Vec<Vec<(u64, usize, usize)>> = vec![Vec::new(); n];
    for (idx, br) in net.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        ends[br.from].push((net.bus_ids[br.to], idx, br.to));
        ends[br.to].push((net.bus_ids[br.from], idx, br.from));
    }

    let mut end_section = std::collections::HashMap::new();
    for bus in 0..n {
        let mut elems = ends[bus].clone();
        elems.sort_unstable();
        for (_, branch, neighbor) in elems {
            end_section.insert((branch, bus), sections.len());
            rings[bus].push(sections.len());
            sections.push(Section {
                bus,
                element: SectionElement::BranchEnd { branch, neighbor },
            });
        }
        if net.load[bus] != Complex64::default() {
            rings[bus].push(sections.len());
            sections.push(Section {
                bus,
                element: SectionElement::Load,
            });
        }
        if net.has_generator[bus] {
            rings[bus].push(sections.len());
            sections.push(Section {
                bus,
                element: SectionElement::Generator,
            });
        }
        if rings[bus].is_empty() {
            rings[bus].push(sections.len());
            sections.push(Section {
                bus,
                element: SectionElement::Empty,
            });
        }
    }

    let ns = sections.len();
    let mut y = Admittance::new(ns);
    for s in 0..ns {
        y.add(s, s, Complex64::default());
    }
    for (idx, br) in net.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let sf = end_section[&(idx, br.from)];
        let st = end_section[&(idx, br.to)];
        y.apply(&br.block.relocated(sf, st));
        branch_sections[idx] = Some((sf, st));
    }
    for bus in 0..n {
        if net.shunt[bus] != Complex64::default() {
            let m = rings[bus][0];
            y.add(m, m, net.shunt[bus]);
        }
    }

    let mut injections = vec![0.0; 2 * ns];
    for (s, sec) in sections.iter().enumerate() {
        let val = match sec.element {
            SectionElement::Load => -net.load[sec.bus],
            SectionElement::Generator => net.generation[sec.bus],
            _ => Complex64::default(),
        };
        injections[s] = val.re;
        injections[ns + s] = val.im;
    }

    let mut constraints = Vec::new();
    let mut ties = vec![None; ns];
    for ring in &rings {
        let master = ring[0];
        for &s in &ring[1..] {
            let a = constraints.len();
            constraints.push(Constraint::tie(s, master, Component::Angle));
            constraints.push(Constraint::tie(s, master, Component::Magnitude));
            ties[s] = Some((a, a + 1));
        }
    }
    let regulating_section = |bus: usize| {
        rings[bus]
            .iter()
            .copied()
            .find(|&s| sections[s].element == SectionElement::Generator)
            .unwrap_or(rings[bus][0])
    };
    constraints.push(Constraint::fixed(
        regulating_section(net.slack),
        Component::Angle,
        net.slack_angle,
    ));
    for bus in 0..n {
        let Some(v) = net.vset[bus] else { continue };
        if matches!(net.kinds[bus], BusType::Slack | BusType::PV) {
            constraints.push(Constraint::fixed(
                regulating_section(bus),
                Component::Magnitude,
                v,
            ));
        }
    }

    BreakerNetwork {
        sections,
        rings,
        model: FlowModel::new(y, injections, constraints),
        ties,
        branch_sections,
        bus_ids: net.bus_ids.clone(),
        bus_load: net.load.clone(),
    }
}

/// All admissible two-breaker splits.
///
/// A pair is rejected when either arc holds a load or generator section but
/// no branch section, since opening it would isolate a nonzero injection.
pub fn enumerate_splits(bnet: &BreakerNetwork) -> Vec<SplitCandidate> {
    let mut out = Vec::new();
    for (bus, ring) in bnet.rings.iter().enumerate() {
        let d = ring.len();
        if d < 2 {
            continue;
        }
        for p in 0..d {
            for q in p + 1..d {
                let arc: Vec<usize> = ring[p + 1..=q].to_vec();
                let rest: Vec<usize> = ring[q + 1..]
                    .iter()
                    .chain(&ring[..=p])
                    .copied()
                    .collect();
                if arc.is_empty() || rest.is_empty() {
                    continue;
                }
                let isolates = |group: &[usize]| {
                    let has_inj = group
                        .iter()
                        .any(|&s| bnet.sections[s].element.is_injection());
                    let has_branch = group.iter().any(|&s| bnet.sections[s].element.is_branch());
                    has_inj && !has_branch
                };
                if isolates(&arc) || isolates(&rest) {
                    continue;
                }
                let mut breakaway = if arc.contains(&ring[0]) { rest } else { arc };
                breakaway.sort_unstable();
                out.push(SplitCandidate {
                    bus,
                    breakers: (p, q),
                    breakaway,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::case::{RawBranch, RawBus, RawCase, RawGenerator};
    use crate::netmodel::build_admittance;

    fn bus(id: u64, kind: BusType, pd: f64) -> RawBus {
        RawBus {
            id,
            kind,
            pd,
            qd: pd / 2.0,
            gs: 0.0,
            bs: 0.0,
            vm: 1.0,
            va: 0.0,
        }
    }

    fn branch(from: u64, to: u64) -> RawBranch {
        RawBranch {
            from,
            to,
            r: 0.01,
            x: 0.1,
            b_charge: 0.02,
            tap: 1.0,
            shift: 0.0,
            status: 1,
        }
    }

    /// Bus 1 (slack) with three branches and a load.
    fn star_case() -> RawCase {
        RawCase {
            base_mva: 100.0,
            buses: vec![
                bus(1, BusType::Slack, 0.2),
                bus(2, BusType::PQ, 0.1),
                bus(3, BusType::PQ, 0.1),
                bus(4, BusType::PQ, 0.1),
            ],
            generators: vec![RawGenerator {
                bus: 1,
                pg: 0.5,
                qg: 0.0,
                vset: 1.0,
                status: 1,
            }],
            branches: vec![branch(1, 2), branch(1, 3), branch(1, 4), branch(2, 3)],
        }
    }

    #[test]
    fn ring_layout() {
        let mut case = star_case();
        case.generators[0].bus = 2;
        case.buses[1].kind = BusType::PV;
        case.buses[0].kind = BusType::Slack;
        case.generators.push(RawGenerator {
            bus: 1,
            pg: 0.0,
            qg: 0.0,
            vset: 1.0,
            status: 1,
        });
        let net = build_admittance(&case).unwrap();
        let bnet = expand_to_breaker_model(&net);
        // bus 1: 3 branch ends + load + gen
        assert_eq!(bnet.rings[0].len(), 5);
        let ring = &bnet.rings[0];
        let neighbors: Vec<u64> = ring[..3]
            .iter()
            .map(|&s| match bnet.sections[s].element {
                SectionElement::BranchEnd { neighbor, .. } => bnet.bus_ids[neighbor],
                _ => panic!("expected branch end"),
            })
            .collect();
        assert_eq!(neighbors, vec![2, 3, 4]);
        assert_eq!(bnet.sections[ring[3]].element, SectionElement::Load);
        assert_eq!(bnet.sections[ring[4]].element, SectionElement::Generator);
    }

    #[test]
    fn three_branches_and_load() {
        let mut case = star_case();
        case.generators[0].bus = 2;
        case.buses[0].kind = BusType::PQ;
        case.buses[1].kind = BusType::Slack;
        let net = build_admittance(&case).unwrap();
        let bnet = expand_to_breaker_model(&net);
        let ring = &bnet.rings[0];
        assert_eq!(ring.len(), 4);
        let tie_columns = ring[1..].iter().filter(|&&s| bnet.ties[s].is_some()).count() * 2;
        assert_eq!(tie_columns, 6);
        // c = 2 (sections - substations) + boundary rows (slack angle + magnitude)
        let expected_c = 2 * (bnet.section_count() - bnet.bus_count()) + 2;
        assert_eq!(bnet.model.c(), expected_c);
        let splits = enumerate_splits(&bnet);
        // C(4,2) = 6 pairs; the pair isolating the load is excluded
        let at_bus: Vec<_> = splits.iter().filter(|s| s.bus == 0).collect();
        assert_eq!(at_bus.len(), 5);
        assert!(at_bus
            .iter()
            .all(|s| !(s.breakaway.len() == 1 && bnet.sections[s.breakaway[0]].element == SectionElement::Load)));
        // single branch-section breakaways survive
        assert!(at_bus
            .iter()
            .any(|s| s.breakaway.len() == 1 && bnet.sections[s.breakaway[0]].element.is_branch()));
    }

    #[test]
    fn single_element_bus_has_no_splits() {
        let case = RawCase {
            base_mva: 100.0,
            buses: vec![bus(1, BusType::Slack, 0.0), bus(2, BusType::PQ, 0.0)],
            generators: vec![],
            branches: vec![branch(1, 2)],
        };
        let net = build_admittance(&case).unwrap();
        let bnet = expand_to_breaker_model(&net);
        assert_eq!(bnet.rings[1].len(), 1);
        assert!(enumerate_splits(&bnet).iter().all(|s| s.bus != 1));
    }
}
