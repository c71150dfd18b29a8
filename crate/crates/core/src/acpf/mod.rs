//! AC power flow: mismatch, Jacobian, Newton solve and the reusable bordered
//! factorization.

mod bordered;
mod jacobian;
mod mismatch;
mod newton;
mod sparse;
mod state;

pub use bordered::{bordered_matrix, BorderedJacobian};
pub use jacobian::{jacobian, jacobian_triplets};
pub use mismatch::{max_abs, power_injections, power_mismatch};
pub use newton::{newton_solve, NewtonOptions, NewtonReport};
pub use sparse::CsrMatrix;
pub use state::SystemState;
