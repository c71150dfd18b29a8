use serde::Serialize;

use crate::acpf::SystemState;
use crate::error::{Error, Result};
use crate::netmodel::{BreakerNetwork, DeltaY, FlowModel, SplitCandidate};

/// Sparse column over the stacked state: `(index, value)` pairs.
pub type SparseColumn = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Merge,
    Split,
    Line,
}

/// Low-rank blocks describing one contingency at a linearization state.
///
/// Merge and split use the bordered form `[[A, U], [U^T, 0]]` with right-hand
/// side `-(0, rhs)`; a line failure uses `[[A, U], [V^T, -I]]` with
/// `r = U z` and `rhs = z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyBlocks {
    pub kind: BlockKind,
    pub u: Vec<SparseColumn>,
    /// Empty for merge and split.
    pub v: Vec<SparseColumn>,
    pub rhs: Vec<f64>,
}

pub const LINE_Z: [f64; 3] = [0.0, 0.5, 0.5];

impl ContingencyBlocks {
    pub fn p(&self) -> usize {
        self.u.len()
    }

    /// Dense copy of column `j` of `U` over a state of length `dim`.
    pub fn dense_u(&self, j: usize, dim: usize) -> Vec<f64> {
        densify(&self.u[j], dim)
    }

    pub fn dense_v(&self, j: usize, dim: usize) -> Vec<f64> {
        densify(&self.v[j], dim)
    }

    /// `r = U z` for a line block, dense.
    pub fn line_residual(&self, dim: usize) -> Vec<f64> {
        let mut r = vec![0.0; dim];
        for (col, &zj) in self.u.iter().zip(&self.rhs) {
            for &(i, val) in col {
                r[i] += zj * val;
            }
        }
        r
    }
}

fn densify(col: &SparseColumn, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for &(i, v) in col {
        out[i] += v;
    }
    out
}

/// The four nonzero entries `(P_i, P_k, Q_i, Q_k)` of `H(v; dY)`.
pub fn line_injection_change(delta: &DeltaY, theta: &[f64], vmag: &[f64]) -> [f64; 4] {
    let parts = LineParts::new(delta, theta, vmag);
    [parts.p_i, parts.p_k, parts.q_i, parts.q_k]
}

struct LineParts {
    p_i: f64,
    p_k: f64,
    q_i: f64,
    q_k: f64,
    gi: f64,
    bi: f64,
    gk: f64,
    bk: f64,
}

impl LineParts {
    fn new(delta: &DeltaY, theta: &[f64], vmag: &[f64]) -> Self {
        let (vi, vk) = (vmag[delta.i], vmag[delta.k]);
        let (s, c) = (theta[delta.i] - theta[delta.k]).sin_cos();
        let vv = vi * vk;
        // theta_ki = -theta_ik
        let p_ik = vv * (delta.ik.re * c + delta.ik.im * s);
        let q_ik = vv * (-delta.ik.im * c + delta.ik.re * s);
        let p_ki = vv * (delta.ki.re * c - delta.ki.im * s);
        let q_ki = vv * (-delta.ki.im * c - delta.ki.re * s);
        let gi = delta.ii.re * vi * vi;
        let bi = delta.ii.im * vi * vi;
        let gk = delta.kk.re * vk * vk;
        let bk = delta.kk.im * vk * vk;
        Self {
            p_i: p_ik + gi,
            q_i: q_ik - bi,
            p_k: p_ki + gk,
            q_k: q_ki - bk,
            gi,
            bi,
            gk,
            bk,
        }
    }
}

/// Rank-three blocks of an admittance change on the branch `(delta.i, delta.k)`.
pub fn line_blocks(model: &FlowModel, state: &SystemState, delta: &DeltaY) -> Result<ContingencyBlocks> {
    let n = model.n();
    let (i, k) = (delta.i, delta.k);
    if i == k {
        return Err(Error::IdenticalPair(i, k));
    }
    if i >= n || k >= n {
        return Err(Error::Dimension(format!("branch ({i},{k}) outside {n} nodes")));
    }
    for node in [i, k] {
        if state.vmag[node] == 0.0 {
            return Err(Error::ZeroVoltage(node));
        }
    }
    if delta.is_zero() {
        return Ok(ContingencyBlocks {
            kind: BlockKind::Line,
            u: vec![Vec::new(); 3],
            v: vec![Vec::new(); 3],
            rhs: LINE_Z.to_vec(),
        });
    }

    let LineParts {
        p_i,
        p_k,
        q_i,
        q_k,
        gi,
        bi,
        gk,
        bk,
    } = LineParts::new(delta, &state.theta, &state.vmag);

    // rows (P_i, P_k, Q_i, Q_k); columns (theta_ik, log|v_i|, log|v_k|)
    let u_ik = [
        [-q_i - bi, p_i + gi, p_i - gi],
        [q_k + bk, p_k - gk, p_k + gk],
        [p_i - gi, q_i - bi, q_i + bi],
        [-p_k + gk, q_k + bk, q_k - bk],
    ];
    let rows = [i, k, n + i, n + k];
    let u = (0..3)
        .map(|col| rows.iter().zip(&u_ik).map(|(&r, vals)| (r, vals[col])).collect())
        .collect();
    let v = vec![
        vec![(i, 1.0), (k, -1.0)],
        vec![(n + i, 1.0 / state.vmag[i])],
        vec![(n + k, 1.0 / state.vmag[k])],
    ];
    Ok(ContingencyBlocks {
        kind: BlockKind::Line,
        u,
        v,
        rhs: LINE_Z.to_vec(),
    })
}

/// Blocks tying nodes `a` and `b` together: one angle-difference column and
/// one magnitude-difference column.
pub fn merge_blocks(model: &FlowModel, state: &SystemState, a: usize, b: usize) -> Result<ContingencyBlocks> {
    let n = model.n();
    if a == b {
        return Err(Error::IdenticalPair(a, b));
    }
    if a >= n || b >= n {
        return Err(Error::Dimension(format!("merge pair ({a},{b}) outside {n} nodes")));
    }
    Ok(ContingencyBlocks {
        kind: BlockKind::Merge,
        u: vec![vec![(a, 1.0), (b, -1.0)], vec![(n + a, 1.0), (n + b, -1.0)]],
        v: Vec::new(),
        rhs: vec![
            state.theta[a] - state.theta[b],
            state.vmag[a] - state.vmag[b],
        ],
    })
}

/// Blocks releasing the breakaway sections of a split from their master.
///
/// `F` has a magnitude column and an angle column, each summing the tie rows
/// of the breakaway sections; `rhs = F^T lambda`.
pub fn split_blocks(bnet: &BreakerNetwork, state: &SystemState, split: &SplitCandidate) -> Result<ContingencyBlocks> {
    let ring = &bnet.rings[split.bus];
    let master = ring[0];
    let group: Vec<usize> = if split.breakaway.contains(&master) {
        ring.iter().copied().filter(|s| !split.breakaway.contains(s)).collect()
    } else {
        split.breakaway.clone()
    };
    if group.is_empty() {
        return Err(Error::Degenerate(format!(
            "split at bus {} separates nothing",
            bnet.bus_ids[split.bus]
        )));
    }
    let offset = 2 * bnet.section_count();
    let mut mag = Vec::with_capacity(group.len());
    let mut ang = Vec::with_capacity(group.len());
    for &s in &group {
        let (a, m) = bnet.ties[s].ok_or_else(|| {
            Error::Degenerate(format!("section {s} in breakaway group has no tie"))
        })?;
        ang.push(offset + a);
        mag.push(offset + m);
    }
    let rhs = vec![
        mag.iter().map(|&r| state.lambda[r - offset]).sum(),
        ang.iter().map(|&r| state.lambda[r - offset]).sum(),
    ];
    Ok(ContingencyBlocks {
        kind: BlockKind::Split,
        u: vec![
            mag.into_iter().map(|r| (r, 1.0)).collect(),
            ang.into_iter().map(|r| (r, 1.0)).collect(),
        ],
        v: Vec::new(),
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn delta() -> DeltaY {
        DeltaY {
            i: 0,
            k: 1,
            ii: Complex64::new(-0.9, 7.5),
            ik: Complex64::new(1.0, -8.0),
            ki: Complex64::new(1.1, -7.9),
            kk: Complex64::new(-1.05, 7.7),
        }
    }

    #[test]
    fn u_times_z_is_injection_change() {
        let model = FlowModel::new(crate::netmodel::Admittance::new(3), vec![0.0; 6], vec![]);
        let state = SystemState {
            theta: vec![0.1, -0.05, 0.0],
            vmag: vec![1.02, 0.97, 1.0],
            lambda: vec![],
        };
        let blocks = line_blocks(&model, &state, &delta()).unwrap();
        let r = blocks.line_residual(6);
        let h = line_injection_change(&delta(), &state.theta, &state.vmag);
        for (idx, want) in [(0, h[0]), (1, h[1]), (3, h[2]), (4, h[3])] {
            assert!((r[idx] - want).abs() < 1e-14);
        }
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn dead_line_gives_zero_blocks() {
        let model = FlowModel::new(crate::netmodel::Admittance::new(2), vec![0.0; 4], vec![]);
        let d = DeltaY {
            i: 0,
            k: 1,
            ii: Complex64::default(),
            ik: Complex64::default(),
            ki: Complex64::default(),
            kk: Complex64::default(),
        };
        let blocks = line_blocks(&model, &SystemState::flat(2, 0), &d).unwrap();
        assert!(blocks.u.iter().chain(&blocks.v).all(|c| c.is_empty()));
    }

    #[test]
    fn zero_voltage_rejected() {
        let model = FlowModel::new(crate::netmodel::Admittance::new(2), vec![0.0; 4], vec![]);
        let mut state = SystemState::flat(2, 0);
        state.vmag[1] = 0.0;
        assert!(matches!(
            line_blocks(&model, &state, &delta()),
            Err(Error::ZeroVoltage(1))
        ));
    }

    #[test]
    fn merge_pair_must_differ() {
        let model = FlowModel::new(crate::netmodel::Admittance::new(2), vec![0.0; 4], vec![]);
        assert!(merge_blocks(&model, &SystemState::flat(2, 0), 1, 1).is_err());
    }
}
