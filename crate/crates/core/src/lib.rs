//! One-world quantum event simulation in the transactional picture.
//!
//! An emitter issues an offer wave (a normalized state vector). Every
//! available absorber answers with a confirmation wave whose weight at the
//! emitter is the Born probability of its outcome. The resulting incipient
//! transactions compete, and at most one of them actualizes per trial.
//!
//! Absorbers are grouped into a hierarchy of stages by the invariant interval
//! between emission and absorption: nearer stages are resolved first, and a
//! stage that fails hands the unabsorbed remainder of the offer wave to the
//! next one. Absorbers may be contingent on that history.
//!
//! * [`qcore`]: dense complex vectors and operators over labeled bases.
//! * [`engine`]: confirmation gathering, stage and cascade resolution,
//!   conservation checks, and the exact (non-sampled) outcome distribution.
//! * [`scenarios`]: executable experiment definitions with analytic tables.
//! * [`harness`]: seeded Monte Carlo runner, comparison and CHSH estimation.

pub mod engine;
mod error;
pub mod harness;
pub mod qcore;
pub mod scenarios;

pub use error::{ConservationViolation, Error, Result};

/// Version string embedded in every emitted record.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Label used for trials in which no transaction forms.
pub const NO_TRANSACTION: &str = "NoTransaction";
