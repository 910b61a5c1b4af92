use thiserror::Error;

/// Errors produced anywhere in the evaluation pipeline.
#[derive(Debug, Error)]
pub enum OpeError {
    /// The policy-induced chain has no unique stationary distribution reachable by iteration.
    #[error("policy-induced chain is not ergodic: residual {residual:.3e} after {iterations} iterations")]
    NonErgodicChain { residual: f64, iterations: usize },

    #[error("normalization reference has no usable mass")]
    DegenerateReference,

    #[error("record {index} carries no behavior-policy label")]
    MissingLabel { index: usize },

    #[error("unknown method identifier `{0}`")]
    UnknownMethod(String),

    #[error("unknown environment identifier `{0}`")]
    UnknownEnvironment(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = OpeError> = std::result::Result<T, E>;
