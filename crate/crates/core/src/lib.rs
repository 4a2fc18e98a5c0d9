//! Two-qubit unitary analysis: canonical decomposition, entangling
//! capacities, distinguishability of the canonical form from its adjoint,
//! and the two-pure-state classical capacity relations.

pub mod canonical;
pub mod capacities;
pub mod distinguishability;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod report;

pub use error::{Error, Result};
