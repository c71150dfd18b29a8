//! Factorized bordered Jacobian `A = [[dH/dv, C], [C^T, 0]]`.
//!
//! The sparse LU is computed once at the linearization state and reused for
//! every solve with `A` and with `A^T`. The factorization is immutable, so one
//! instance can serve concurrent solves from many threads.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};

use super::jacobian::jacobian_triplets;
use super::sparse::CsrMatrix;
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::netmodel::FlowModel;

/// Relative accuracy demanded from the factorization self-check.
const SINGULARITY_PROBE_TOL: f64 = 1e-6;

pub struct BorderedJacobian {
    n: usize,
    c: usize,
    matrix: CsrMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for BorderedJacobian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BorderedJacobian")
            .field("n", &self.n)
            .field("c", &self.c)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

/// Assembles `A` at `state` without factorizing it.
pub fn bordered_matrix(model: &FlowModel, state: &SystemState) -> CsrMatrix {
    let n = model.n();
    let dim = model.dim();
    let mut triplets = jacobian_triplets(&model.y, &state.theta, &state.vmag);
    for (k, con) in model.constraints.iter().enumerate() {
        let col = 2 * n + k;
        for &(row, coeff) in &con.terms {
            triplets.push((row, col, coeff));
            triplets.push((col, row, coeff));
        }
    }
    CsrMatrix::from_triplets(dim, dim, triplets)
}

impl BorderedJacobian {
    /// Assembles and factorizes `A` at `state`.
    pub fn new(model: &FlowModel, state: &SystemState) -> Result<Self> {
        if state.n() != model.n() || state.c() != model.c() {
            return Err(Error::Dimension(format!(
                "state (n={}, c={}) does not match model (n={}, c={})",
                state.n(),
                state.c(),
                model.n(),
                model.c()
            )));
        }
        Self::from_matrix(model.n(), model.c(), bordered_matrix(model, state))
    }

    pub fn from_matrix(n: usize, c: usize, matrix: CsrMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != 2 * n + c || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "bordered matrix is {}x{}, expected {}",
                matrix.nrows(),
                matrix.ncols(),
                2 * n + c
            )));
        }

        // structurally empty rows/columns name their pivot directly
        let mut row_has = vec![false; dim];
        let mut col_has = vec![false; dim];
        for (r, col, v) in matrix.entries() {
            if v != 0.0 {
                row_has[r] = true;
                col_has[col] = true;
            }
        }
        if let Some(r) = row_has.iter().position(|h| !h) {
            return Err(Error::Singular {
                pivot: Some(r),
                detail: format!("row {r} of the bordered Jacobian is identically zero"),
            });
        }
        if let Some(col) = col_has.iter().position(|h| !h) {
            return Err(Error::Singular {
                pivot: Some(col),
                detail: format!("column {col} of the bordered Jacobian is identically zero"),
            });
        }

        let triplets: Vec<Triplet<usize, usize, f64>> = matrix
            .entries()
            .map(|(r, col, v)| Triplet::new(r, col, v))
            .collect();
        let sparse = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &triplets)
            .map_err(|e| Error::Dimension(format!("sparse assembly failed: {e:?}")))?;
        let lu = sparse.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::Singular {
                pivot: Some(index),
                detail: format!("structurally singular at elimination step {index}"),
            },
            other => Error::Singular {
                pivot: None,
                detail: format!("factorization failed: {other:?}"),
            },
        })?;

        let jac = Self { n, c, matrix, lu };
        jac.probe()?;
        Ok(jac)
    }

    /// Solves against a known vector; a numerically singular `A` shows up as
    /// a large or non-finite error concentrated on the null direction.
    fn probe(&self) -> Result<()> {
        let dim = self.dim();
        let truth: Vec<f64> = (0..dim)
            .map(|i| 1.0 + ((i as f64) * 0.618_033_988_749_895).fract())
            .collect();
        let rhs = self.matrix.mul_vec(&truth);
        let x = self.solve(&rhs);
        let (worst, err) = x
            .iter()
            .zip(&truth)
            .map(|(a, b)| if a.is_finite() { (a - b).abs() } else { f64::INFINITY })
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
        if !(err <= SINGULARITY_PROBE_TOL * 2.0) {
            return Err(Error::Singular {
                pivot: Some(worst),
                detail: format!(
                    "numerically singular; probe error {err:e} concentrated at state index {worst}"
                ),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.c
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve_many(&[rhs.to_vec()]).pop().unwrap()
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve_transpose_many(&[rhs.to_vec()]).pop().unwrap()
    }

    /// Solves `A X = B` for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.solve_block(rhs, false)
    }

    /// Solves `A^T X = B` for several right-hand sides at once.
    pub fn solve_transpose_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.solve_block(rhs, true)
    }

    fn solve_block(&self, rhs: &[Vec<f64>], transpose: bool) -> Vec<Vec<f64>> {
        let dim = self.dim();
        if rhs.is_empty() {
            return Vec::new();
        }
        for col in rhs {
            assert_eq!(col.len(), dim, "right-hand side has wrong length");
        }
        let mut block = Mat::<f64>::from_fn(dim, rhs.len(), |i, j| rhs[j][i]);
        if transpose {
            self.lu
                .solve_transpose_in_place_with_conj(Conj::No, block.as_mut());
        } else {
            self.lu.solve_in_place_with_conj(Conj::No, block.as_mut());
        }
        (0..rhs.len())
            .map(|j| block.col_as_slice(j).to_vec())
            .collect()
    }

    /// `||A x - rhs||_2 / ||rhs||_2` (absolute when `rhs = 0`).
    pub fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let num = ax
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }
}
