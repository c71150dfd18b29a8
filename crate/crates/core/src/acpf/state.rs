use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polar voltage state plus constraint multipliers.
///
/// Stacked order is `(theta_1..theta_n, |v|_1..|v|_n, lambda_1..lambda_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub theta: Vec<f64>,
    pub vmag: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SystemState {
    pub fn flat(n: usize, c: usize) -> Self {
        Self {
            theta: vec![0.0; n],
            vmag: vec![1.0; n],
            lambda: vec![0.0; c],
        }
    }

    pub fn from_stacked(n: usize, c: usize, x: &[f64]) -> Result<Self> {
        if x.len() != 2 * n + c {
            return Err(Error::Dimension(format!(
                "stacked state has {} entries, expected {}",
                x.len(),
                2 * n + c
            )));
        }
        Ok(Self {
            theta: x[..n].to_vec(),
            vmag: x[n..2 * n].to_vec(),
            lambda: x[2 * n..].to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn c(&self) -> usize {
        self.lambda.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n() + self.c()
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        x.extend_from_slice(&self.theta);
        x.extend_from_slice(&self.vmag);
        x.extend_from_slice(&self.lambda);
        x
    }

    /// `self + step * dx` over the stacked layout.
    pub fn stepped(&self, dx: &[f64], step: f64) -> Self {
        let n = self.n();
        let mut out = self.clone();
        for (i, t) in out.theta.iter_mut().enumerate() {
            *t += step * dx[i];
        }
        for (i, v) in out.vmag.iter_mut().enumerate() {
            *v += step * dx[n + i];
        }
        for (i, l) in out.lambda.iter_mut().enumerate() {
            *l += step * dx[2 * n + i];
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.theta.iter().chain(&self.lambda).all(|x| x.is_finite())
            && self.vmag.iter().all(|v| v.is_finite() && *v > 0.0)
    }
}
