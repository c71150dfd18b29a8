use super::blocks::{BlockKind, ContingencyBlocks, SparseColumn};
use crate::acpf::BorderedJacobian;
use crate::error::{Error, Result};
use crate::netmodel::ObservationOperator;

/// Relative pivot size below which a capture matrix counts as singular.
const PIVOT_TOL: f64 = 1e-11;

/// Approximate post-contingency shift `delta_x' = -A^{-1} U w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub gamma: Vec<f64>,
    /// `w`: `gamma` for merge/split, `z + gamma` for a line.
    pub coefficients: Vec<f64>,
    pub delta_x: Vec<f64>,
}

impl Fingerprint {
    pub fn observed(&self, obs: &ObservationOperator) -> Vec<f64> {
        obs.apply(&self.delta_x)
    }
}

fn dot_sparse(col: &SparseColumn, dense: &[f64]) -> f64 {
    col.iter().map(|&(i, v)| v * dense[i]).sum()
}

/// Solves the small capture system given the dense columns of `A^{-1} U`.
///
/// Returns `(gamma, w)`.
pub fn capture(blocks: &ContingencyBlocks, a_inv_u: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = blocks.p();
    match blocks.kind {
        BlockKind::Merge | BlockKind::Split => {
            let m: Vec<Vec<f64>> = (0..p)
                .map(|r| (0..p).map(|c| dot_sparse(&blocks.u[r], &a_inv_u[c])).collect())
                .collect();
            let gamma = solve_small(m, blocks.rhs.clone())?;
            Ok((gamma.clone(), gamma))
        }
        BlockKind::Line => {
            let w: Vec<Vec<f64>> = (0..p)
                .map(|r| (0..p).map(|c| dot_sparse(&blocks.v[r], &a_inv_u[c])).collect())
                .collect();
            let z = &blocks.rhs;
            let rhs: Vec<f64> = w
                .iter()
                .map(|row| -row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let mut i_plus_w = w;
            for (r, row) in i_plus_w.iter_mut().enumerate() {
                row[r] += 1.0;
            }
            let gamma = solve_small(i_plus_w, rhs)?;
            let coeff = z.iter().zip(&gamma).map(|(a, b)| a + b).collect();
            Ok((gamma, coeff))
        }
    }
}

/// Block elimination against the shared factorization of `A`.
pub fn eliminate(jac: &BorderedJacobian, blocks: &ContingencyBlocks) -> Result<Fingerprint> {
    let dim = jac.dim();
    let cols: Vec<Vec<f64>> = (0..blocks.p()).map(|j| blocks.dense_u(j, dim)).collect();
    let a_inv_u = jac.solve_many(&cols);
    let (gamma, coefficients) = capture(blocks, &a_inv_u)?;
    let mut delta_x = vec![0.0; dim];
    for (col, &w) in a_inv_u.iter().zip(&coefficients) {
        for (d, &x) in delta_x.iter_mut().zip(col) {
            *d -= w * x;
        }
    }
    Ok(Fingerprint {
        gamma,
        coefficients,
        delta_x,
    })
}

/// Gaussian elimination with partial pivoting for the p x p capture matrix.
fn solve_small(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let p = b.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Degenerate(format!("capture matrix has scale {scale:e}")));
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col].abs() <= PIVOT_TOL * scale {
            return Err(Error::Degenerate(format!(
                "capture matrix pivot {:e} at column {col} (scale {scale:e})",
                m[piv][col]
            )));
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..p {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..p {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_solve() {
        let x = solve_small(
            vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]],
            vec![5.0, 3.0, 6.0],
        )
        .unwrap();
        let want = [1.4, 1.6, 1.8];
        for (a, b) in x.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn singular_small_solve_is_degenerate() {
        let r = solve_small(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }
}
