//! Network cases, admittance assembly, ring-substation expansion and PMU
//! observation operators.

mod admittance;
mod breaker;
mod case;
mod model;
mod pmu;

pub use admittance::{
    branch_pi_block, build_admittance, Admittance, BranchModel, BusBranchNetwork, DeltaY,
};
pub use breaker::{
    enumerate_splits, expand_to_breaker_model, BreakerNetwork, Section, SectionElement,
    SplitCandidate,
};
pub use case::{parse_case, parse_matpower, BusType, RawBranch, RawBus, RawCase, RawGenerator};
pub use model::{Component, Constraint, ConstraintKind, FlowModel};
pub use pmu::{observation_operator, ObservationOperator, PmuDeployment, PmuSite};
