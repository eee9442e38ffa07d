use thiserror::Error;

/// Errors raised by the linear-algebra layer, the transaction engine and the
/// scenario/harness plumbing built on top of them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space mismatch: {left:?} vs {right:?}")]
    SpaceMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty space: dimension must be at least 1")]
    EmptySpace,
    #[error("duplicate basis label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown basis label {0:?}")]
    UnknownLabel(String),
    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),
    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("operator is not a projector (deviation {deviation:e})")]
    NotProjector { deviation: f64 },
    #[error("operator is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid absorber set: {0}")]
    InvalidAbsorberSet(String),
    #[error("invalid stage {stage_rank}: total confirmation weight {total_weight} exceeds 1")]
    InvalidStage { stage_rank: usize, total_weight: f64 },
    #[error("invalid cascade: {0}")]
    InvalidCascade(String),
    #[error("conservation of {quantity} violated by {violations:?}")]
    ConservationViolation {
        quantity: String,
        violations: Vec<ConservationViolation>,
    },
    #[error("conservation rule for {quantity} has no value for outcome {label:?}")]
    MissingConservedValue { quantity: String, label: String },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("invalid parameter {name:?}: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("trial count must be at least 1")]
    NoTrials,
}

/// One live transaction whose outcome does not carry the emitted value of the
/// conserved quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationViolation {
    pub absorber_id: String,
    pub outcome_label: String,
    pub weight: f64,
    pub outcome_value: f64,
    pub emitted_value: f64,
}

pub type Result<T> = std::result::Result<T, Error>;
