//! Topology-change identification for power networks from sparse PMU data.
//!
//! A contingency (line failure, substation split, bus merge) shifts the
//! network's voltage state. Each candidate contingency is linearized around
//! the pre-event state into a low-rank modification of the bordered
//! power-flow Jacobian, giving a predicted voltage shift (its fingerprint).
//! Candidates are ranked by how well their observed fingerprint matches the
//! measured change; a cheap least-squares lower bound prunes most of them.

pub mod acpf;
pub mod error;
pub mod fingerprint;
pub mod flier;
pub mod netmodel;
pub mod synth;

pub use error::{Error, Result};
