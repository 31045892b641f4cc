use thiserror::Error;

/// Which limit-state function produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    Low,
    High,
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fidelity::Low => f.write_str("LF"),
            Fidelity::High => f.write_str("HF"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("score undefined at coordinate {coord}: {value} is not inside the open support")]
    ScoreUndefined { coord: usize, value: f64 },

    #[error("{fidelity} limit state returned a non-finite value at z = {z:?}")]
    NonFinite { fidelity: Fidelity, z: Vec<f64> },

    #[error("model evaluation failed: {0}")]
    Model(String),

    #[error("linear solve did not converge: relative residual {residual:e}")]
    SolverNonConvergence { residual: f64 },

    #[error("normalizer not estimated")]
    NormalizerMissing,

    #[error("requested {requested} samples but only {available} are available")]
    InsufficientSamples { requested: usize, available: usize },

    #[error("every chain produced a non-finite trajectory: {0}")]
    DegenerateChain(String),

    #[error("approach one is invalid: no pilot HF sample failed (all proxy values are zero); use approach two")]
    NoPilotFailures,

    #[error("failure probability estimate is zero; bound undefined")]
    ZeroFailureProbability,

    #[error("insufficient budget: {0}")]
    Budget(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
