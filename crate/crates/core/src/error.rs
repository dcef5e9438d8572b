use thiserror::Error;

use crate::classifiers::ClassifierError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability out of range [0, 1]: {0}")]
    InvalidProbability(f64),

    #[error("smoothing sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("confidence budget exceeded: requested {requested} with {remaining} remaining of eta={eta}")]
    BudgetExceeded { eta: f64, requested: f64, remaining: f64 },

    #[error("infeasible evidence: gradient norm {grad_norm} exceeds the maximum {max} for p={p}")]
    InfeasibleEvidence { p: f64, grad_norm: f64, max: f64 },

    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid classifier: {0}")]
    InvalidClassifier(String),

    #[error("classifier failed on sample {sample}")]
    Sampling {
        sample: u64,
        #[source]
        source: ClassifierError,
    },

    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}
