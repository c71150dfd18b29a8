use super::state::SystemState;
use crate::error::{Error, Result};
use crate::netmodel::{Admittance, Constraint, FlowModel};

/// Injected powers `H(v; Y)` as `[P_1..P_n, Q_1..Q_n]`.
pub fn power_injections(y: &Admittance, theta: &[f64], vmag: &[f64]) -> Vec<f64> {
    let n = y.n();
    let mut h = vec![0.0; 2 * n];
    for l in 0..n {
        let (mut p, mut q) = (0.0, 0.0);
        for &(k, yk) in y.row(l) {
            let (s, c) = (theta[l] - theta[k]).sin_cos();
            let vv = vmag[l] * vmag[k];
            p += vv * (yk.re * c + yk.im * s);
            q += vv * (-yk.im * c + yk.re * s);
        }
        h[l] = p;
        h[n + l] = q;
    }
    h
}

/// Residual `[H(v;Y) + C lambda - s ; C^T v - b]`.
pub fn power_mismatch(
    state: &SystemState,
    y: &Admittance,
    injections: &[f64],
    constraints: &[Constraint],
) -> Result<Vec<f64>> {
    let n = y.n();
    if state.n() != n || injections.len() != 2 * n || state.c() != constraints.len() {
        return Err(Error::Dimension(format!(
            "state (n={}, c={}) vs model (n={n}, c={}, |s|={})",
            state.n(),
            state.c(),
            constraints.len(),
            injections.len()
        )));
    }
    let h = power_injections(y, &state.theta, &state.vmag);
    let mut out = Vec::with_capacity(2 * n + constraints.len());
    out.extend(h.iter().zip(injections).map(|(h, s)| h - s));
    let voltage = |idx: usize| {
        if idx < n {
            state.theta[idx]
        } else {
            state.vmag[idx - n]
        }
    };
    for (k, con) in constraints.iter().enumerate() {
        for &(row, coeff) in &con.terms {
            out[row] += coeff * state.lambda[k];
        }
    }
    for con in constraints {
        let cv: f64 = con.terms.iter().map(|&(row, coeff)| coeff * voltage(row)).sum();
        out.push(cv - con.rhs);
    }
    Ok(out)
}

impl FlowModel {
    pub fn mismatch(&self, state: &SystemState) -> Result<Vec<f64>> {
        power_mismatch(state, &self.y, &self.injections, &self.constraints)
    }

    pub fn injected_power(&self, state: &SystemState) -> Vec<f64> {
        power_injections(&self.y, &state.theta, &state.vmag)
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
