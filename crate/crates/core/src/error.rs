use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid case: {0}")]
    Validation(String),

    #[error("unknown bus {0}")]
    UnknownBus(u64),

    #[error("branch {branch} ({from}-{to}) has zero series impedance; model it as a breaker")]
    ZeroImpedance { branch: usize, from: u64, to: u64 },

    #[error("branch {0} is already out of service")]
    BranchOutOfService(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular bordered system: {detail}")]
    Singular {
        /// State index of the offending pivot, when one could be identified.
        pivot: Option<usize>,
        detail: String,
    },

    #[error("power flow did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate contingency: {0}")]
    Degenerate(String),

    #[error("voltage variables {0} and {1} are identical")]
    IdenticalPair(usize, usize),

    #[error("zero voltage magnitude at node {0}")]
    ZeroVoltage(usize),

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
