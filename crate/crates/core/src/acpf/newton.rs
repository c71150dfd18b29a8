use super::bordered::BorderedJacobian;
use super::mismatch::max_abs;
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::netmodel::FlowModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on `||mismatch||_inf`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried when a full step increases the residual.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 50,
            max_halvings: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub state: SystemState,
    pub iterations: usize,
    /// `||mismatch||_inf` before each iteration, ending with the final value.
    pub residual_history: Vec<f64>,
}

/// Newton's method on the bordered power-flow system.
pub fn newton_solve(
    model: &FlowModel,
    initial: &SystemState,
    options: &NewtonOptions,
) -> Result<NewtonReport> {
    let mut state = initial.clone();
    let mut residual = model.mismatch(&state)?;
    let mut norm = max_abs(&residual);
    let mut history = vec![norm];

    for iteration in 0..=options.max_iterations {
        if norm < options.tolerance {
            return Ok(NewtonReport {
                state,
                iterations: iteration,
                residual_history: history,
            });
        }
        if iteration == options.max_iterations || !norm.is_finite() {
            break;
        }
        let jac = BorderedJacobian::new(model, &state)?;
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let dx = jac.solve(&rhs);
        if dx.iter().any(|v| !v.is_finite()) {
            break;
        }

        let mut step = 1.0;
        let mut halvings = 0;
        loop {
            let trial = state.stepped(&dx, step);
            let trial_res = if trial.is_valid() {
                model.mismatch(&trial)?
            } else {
                vec![f64::INFINITY]
            };
            let trial_norm = max_abs(&trial_res);
            if trial_norm <= norm || halvings == options.max_halvings {
                if !trial.is_valid() {
                    return Err(Error::NonConvergence {
                        iterations: iteration + 1,
                        residual: f64::INFINITY,
                    });
                }
                state = trial;
                residual = trial_res;
                norm = trial_norm;
                break;
            }
            step *= 0.5;
            halvings += 1;
        }
        history.push(norm);
    }

    Err(Error::NonConvergence {
        iterations: history.len() - 1,
        residual: norm,
    })
}
