use super::blocks::{ContingencyBlocks, SparseColumn};

/// Dense block `Ē A^{-1}` (m x dim), stored so that column `j` is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRows {
    m: usize,
    dim: usize,
    data: Vec<f64>,
}

impl ObservationRows {
    /// Builds the block from its `m` rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let m = rows.len();
        let dim = rows.first().map_or(0, |r| r.len());
        let mut data = vec![0.0; m * dim];
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "observation rows must share a length");
            for (j, &v) in row.iter().enumerate() {
                data[j * m + r] = v;
            }
        }
        Self { m, dim, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.data[j * self.m + r]).collect()
    }

    /// `Ē A^{-1} x` for a dense `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(&mut out, xj, self.column(j));
            }
        }
        out
    }

    /// `Ē A^{-1} u` for a sparse column.
    pub fn apply_sparse(&self, col: &SparseColumn) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for &(j, v) in col {
            axpy(&mut out, v, self.column(j));
        }
        out
    }

    /// Columns of `Ē A^{-1} U` for a contingency.
    pub fn project(&self, blocks: &ContingencyBlocks) -> Vec<Vec<f64>> {
        blocks.u.iter().map(|c| self.apply_sparse(c)).collect()
    }
}

fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

fn weighted(v: &[f64], weights: Option<&[f64]>) -> Vec<f64> {
    match weights {
        Some(w) => v.iter().zip(w).map(|(a, b)| a * b).collect(),
        None => v.to_vec(),
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Norm of the residual of the least-squares fit of `y` onto `columns`.
///
/// Modified Gram-Schmidt with one reorthogonalization pass; columns that
/// collapse relative to their original length are dropped, which yields the
/// residual over the column range when the set is rank deficient.
pub fn least_squares_residual(y: &[f64], columns: &[Vec<f64>]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for col in columns {
        let original = norm(col);
        if !(original > 0.0) || !original.is_finite() {
            continue;
        }
        let mut q = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = q.iter().zip(b).map(|(a, b)| a * b).sum();
                axpy(&mut q, -proj, b);
            }
        }
        let len = norm(&q);
        if len <= 1e-12 * original {
            continue;
        }
        q.iter_mut().for_each(|v| *v /= len);
        basis.push(q);
    }
    let mut r = y.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let proj: f64 = r.iter().zip(b).map(|(a, b)| a * b).sum();
            axpy(&mut r, -proj, b);
        }
    }
    norm(&r)
}

/// Filter score: `min_mu ||W (E dv - Ē A^{-1} U mu)||`.
pub fn filter_score(
    observed: &[f64],
    rows: &ObservationRows,
    blocks: &ContingencyBlocks,
    weights: Option<&[f64]>,
) -> f64 {
    let cols: Vec<Vec<f64>> = rows
        .project(blocks)
        .iter()
        .map(|c| weighted(c, weights))
        .collect();
    least_squares_residual(&weighted(observed, weights), &cols)
}

/// Fingerprint score: `||W (E dv - E dv')||`.
pub fn fingerprint_score(observed: &[f64], predicted: &[f64], weights: Option<&[f64]>) -> f64 {
    let diff: Vec<f64> = observed.iter().zip(predicted).map(|(a, b)| a - b).collect();
    norm(&weighted(&diff, weights))
}

/// Observed fingerprint `-Ē A^{-1} U w` from precomputed rows.
pub fn observed_fingerprint(rows: &ObservationRows, blocks: &ContingencyBlocks, coefficients: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows.m()];
    for (col, &w) in blocks.u.iter().zip(coefficients) {
        for &(j, v) in col {
            axpy(&mut out, -w * v, rows.column(j));
        }
    }
    out
}
