//! Nodal admittance storage and bus-branch network assembly.

use num_complex::Complex64;

use super::case::{BusType, RawBranch, RawCase};
use super::model::{Component, Constraint, FlowModel};
use crate::error::{Error, Result};

/// Sparse complex admittance matrix stored as sorted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittance {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl Admittance {
    pub fn new(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, i: usize, k: usize, y: Complex64) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&k, |&(c, _)| c) {
            Ok(pos) => row[pos].1 += y,
            Err(pos) => row.insert(pos, (k, y)),
        }
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&k, |&(c, _)| c)
            .map(|pos| row[pos].1)
            .unwrap_or_default()
    }

    /// Stored entries of row `i`, sorted by column, diagonal included.
    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn apply(&mut self, delta: &DeltaY) {
        self.add(delta.i, delta.i, delta.ii);
        self.add(delta.i, delta.k, delta.ik);
        self.add(delta.k, delta.i, delta.ki);
        self.add(delta.k, delta.k, delta.kk);
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.n();
        let mut out = vec![vec![Complex64::default(); n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, y) in row {
                out[i][k] = y;
            }
        }
        out
    }
}

/// A 2x2 admittance block supported on nodes `{i, k}`.
///
/// Used both as a branch's contribution to `Y` and, negated, as the change
/// caused by removing that branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaY {
    pub i: usize,
    pub k: usize,
    pub ii: Complex64,
    pub ik: Complex64,
    pub ki: Complex64,
    pub kk: Complex64,
}

impl DeltaY {
    pub fn scaled(&self, eps: f64) -> Self {
        Self {
            ii: self.ii * eps,
            ik: self.ik * eps,
            ki: self.ki * eps,
            kk: self.kk * eps,
            ..*self
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn is_zero(&self) -> bool {
        [self.ii, self.ik, self.ki, self.kk]
            .iter()
            .all(|y| y.re == 0.0 && y.im == 0.0)
    }

    /// Moves the block onto different node indices.
    pub fn relocated(&self, i: usize, k: usize) -> Self {
        Self { i, k, ..*self }
    }
}

/// Standard pi-model contribution of a branch, as `(ff, ft, tf, tt)`.
pub fn branch_pi_block(br: &RawBranch) -> Option<[Complex64; 4]> {
    let z = Complex64::new(br.r, br.x);
    if z.norm_sqr() == 0.0 {
        return None;
    }
    let ys = z.inv();
    let charge = Complex64::new(0.0, br.b_charge / 2.0);
    let tap = Complex64::from_polar(br.tap, br.shift);
    let ytt = ys + charge;
    let yff = ytt / (br.tap * br.tap);
    let yft = -ys / tap.conj();
    let ytf = -ys / tap;
    Some([yff, yft, ytf, ytt])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchModel {
    pub from: usize,
    pub to: usize,
    /// Contribution to `Y` while in service.
    pub block: DeltaY,
    pub in_service: bool,
}

/// Bus-branch network with its assembled admittance matrix.
#[derive(Debug, Clone)]
pub struct BusBranchNetwork {
    pub base_mva: f64,
    pub bus_ids: Vec<u64>,
    /// Effective bus kinds; a PV bus without an in-service generator is PQ.
    pub kinds: Vec<BusType>,
    pub slack: usize,
    pub y: Admittance,
    /// `[P_1..P_n, Q_1..Q_n]`, net generation minus load.
    pub injections: Vec<f64>,
    pub load: Vec<Complex64>,
    pub generation: Vec<Complex64>,
    pub has_generator: Vec<bool>,
    pub shunt: Vec<Complex64>,
    pub vset: Vec<Option<f64>>,
    pub slack_angle: f64,
    pub branches: Vec<BranchModel>,
    pub initial_vm: Vec<f64>,
    pub initial_va: Vec<f64>,
}

impl BusBranchNetwork {
    pub fn n(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == id)
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = usize> + '_ {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.in_service)
            .map(|(i, _)| i)
    }

    pub fn branch_label(&self, idx: usize) -> String {
        let br = &self.branches[idx];
        format!("{}-{}", self.bus_ids[br.from], self.bus_ids[br.to])
    }

    /// Change in `Y` caused by taking branch `idx` out of service.
    pub fn branch_outage_delta(&self, idx: usize) -> Result<DeltaY> {
        let br = &self.branches[idx];
        if !br.in_service {
            return Err(Error::BranchOutOfService(idx));
        }
        Ok(br.block.negated())
    }

    /// Power-flow model with slack angle/magnitude and PV magnitude rows.
    pub fn flow_model(&self) -> FlowModel {
        let mut constraints = Vec::new();
        constraints.push(Constraint::fixed(
            self.slack,
            Component::Angle,
            self.slack_angle,
        ));
        for bus in 0..self.n() {
            let Some(v) = self.vset[bus] else { continue };
            match self.kinds[bus] {
                BusType::Slack | BusType::PV => {
                    constraints.push(Constraint::fixed(bus, Component::Magnitude, v))
                }
                BusType::PQ => {}
            }
        }
        FlowModel::new(self.y.clone(), self.injections.clone(), constraints)
    }
}

/// Assembles the bus-branch network: series, charging, tap/shift and bus
/// shunt contributions, plus the injection vector.
pub fn build_admittance(case: &RawCase) -> Result<BusBranchNetwork> {
    case.validate()?;
    let n = case.buses.len();
    let bus_ids: Vec<u64> = case.buses.iter().map(|b| b.id).collect();
    let lookup: std::collections::HashMap<u64, usize> =
        bus_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut y = Admittance::new(n);
    let mut shunt = vec![Complex64::default(); n];
    let mut load = vec![Complex64::default(); n];
    for (i, bus) in case.buses.iter().enumerate() {
        shunt[i] = Complex64::new(bus.gs, bus.bs);
        load[i] = Complex64::new(bus.pd, bus.qd);
        // keep the diagonal present even for isolated buses
        y.add(i, i, shunt[i]);
    }

    let mut branches = Vec::with_capacity(case.branches.len());
    for (idx, br) in case.branches.iter().enumerate() {
        let from = *lookup.get(&br.from).ok_or(Error::UnknownBus(br.from))?;
        let to = *lookup.get(&br.to).ok_or(Error::UnknownBus(br.to))?;
        let block = match branch_pi_block(br) {
            Some([ff, ft, tf, tt]) => DeltaY {
                i: from,
                k: to,
                ii: ff,
                ik: ft,
                ki: tf,
                kk: tt,
            },
            None if br.in_service() => {
                return Err(Error::ZeroImpedance {
                    branch: idx,
                    from: br.from,
                    to: br.to,
                })
            }
            None => DeltaY {
                i: from,
                k: to,
                ii: Complex64::default(),
                ik: Complex64::default(),
                ki: Complex64::default(),
                kk: Complex64::default(),
            },
        };
        if br.in_service() {
            y.apply(&block);
        }
        branches.push(BranchModel {
            from,
            to,
            block,
            in_service: br.in_service(),
        });
    }

    let mut generation = vec![Complex64::default(); n];
    let mut has_generator = vec![false; n];
    let mut vset = vec![None; n];
    for gen in case.generators.iter().filter(|g| g.status != 0) {
        let i = *lookup.get(&gen.bus).ok_or(Error::UnknownBus(gen.bus))?;
        generation[i] += Complex64::new(gen.pg, gen.qg);
        if !has_generator[i] {
            vset[i] = Some(gen.vset);
        }
        has_generator[i] = true;
    }

    let mut kinds: Vec<BusType> = case.buses.iter().map(|b| b.kind).collect();
    let slack = kinds
        .iter()
        .position(|k| *k == BusType::Slack)
        .ok_or_else(|| Error::Validation("no slack bus".into()))?;
    for i in 0..n {
        if kinds[i] == BusType::PV && !has_generator[i] {
            kinds[i] = BusType::PQ;
            vset[i] = None;
        }
        if kinds[i] == BusType::PQ {
            vset[i] = None;
        }
    }
    if vset[slack].is_none() {
        vset[slack] = Some(case.buses[slack].vm);
    }

    let mut injections = vec![0.0; 2 * n];
    for i in 0..n {
        let s = generation[i] - load[i];
        injections[i] = s.re;
        injections[n + i] = s.im;
    }

    Ok(BusBranchNetwork {
        base_mva: case.base_mva,
        bus_ids,
        kinds,
        slack,
        y,
        injections,
        load,
        generation,
        has_generator,
        shunt,
        vset,
        slack_angle: case.buses[slack].va,
        branches,
        initial_vm: case.buses.iter().map(|b| b.vm).collect(),
        initial_va: case.buses.iter().map(|b| b.va).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::case::{RawBus, RawGenerator};

    fn bus(id: u64, kind: BusType) -> RawBus {
        RawBus {
            id,
            kind,
            pd: 0.0,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
            vm: 1.0,
            va: 0.0,
        }
    }

    fn line(from: u64, to: u64, r: f64, x: f64, b: f64) -> RawBranch {
        RawBranch {
            from,
            to,
            r,
            x,
            b_charge: b,
            tap: 1.0,
            shift: 0.0,
            status: 1,
        }
    }

    fn two_bus(branch: RawBranch) -> RawCase {
        RawCase {
            base_mva: 100.0,
            buses: vec![bus(1, BusType::Slack), bus(2, BusType::PQ)],
            generators: vec![RawGenerator {
                bus: 1,
                pg: 0.0,
                qg: 0.0,
                vset: 1.0,
                status: 1,
            }],
            branches: vec![branch],
        }
    }

    #[test]
    fn single_reactive_branch() {
        let net = build_admittance(&two_bus(line(1, 2, 0.0, 0.1, 0.0))).unwrap();
        let y12 = net.y.get(0, 1);
        let y11 = net.y.get(0, 0);
        assert!((y12.im - 10.0).abs() < 1e-12 && y12.re.abs() < 1e-12);
        assert!((y11.im + 10.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_service_branch_contributes_nothing() {
        let mut br = line(1, 2, 0.01, 0.1, 0.2);
        br.status = 0;
        let net = build_admittance(&two_bus(br)).unwrap();
        assert_eq!(net.y.get(0, 1), Complex64::default());
        assert_eq!(net.y.get(0, 0), Complex64::default());
        assert!(matches!(
            net.branch_outage_delta(0),
            Err(Error::BranchOutOfService(0))
        ));
    }

    #[test]
    fn zero_impedance_rejected() {
        let err = build_admittance(&two_bus(line(1, 2, 0.0, 0.0, 0.0))).unwrap_err();
        assert!(matches!(err, Error::ZeroImpedance { .. }));
    }

    #[test]
    fn outage_delta_leaves_shunts_only() {
        let mut case = two_bus(line(1, 2, 0.02, 0.2, 0.1));
        case.buses[1].bs = 0.3;
        let net = build_admittance(&case).unwrap();
        let delta = net.branch_outage_delta(0).unwrap();
        // pi-model halves of the charging
        assert!((delta.ii.im - (-(net.branches[0].block.ii.im))).abs() < 1e-15);
        assert!((net.branches[0].block.kk - (Complex64::new(0.02, 0.2).inv() + Complex64::new(0.0, 0.05))).norm() < 1e-14);
        let mut y = net.y.clone();
        y.apply(&delta);
        assert!(y.get(0, 1).norm() < 1e-14);
        assert!(y.get(0, 0).norm() < 1e-14);
        assert!((y.get(1, 1) - Complex64::new(0.0, 0.3)).norm() < 1e-14);
    }
}
