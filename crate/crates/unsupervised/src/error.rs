use fsem_core::error::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UnsupervisedError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("requested {requested} components, but this data supports at most {max}")]
    ComponentCountOutOfRange { requested: usize, max: usize },
    #[error("perplexity {perplexity} is infeasible for {points} points: it must stay below (N-1)/3")]
    PerplexityInfeasible { perplexity: f64, points: usize },
    #[error("{context} needs at least {needed} points, got {got}")]
    TooFewPoints {
        context: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("cannot form {clusters} clusters from {points} points")]
    ClusterCountOutOfRange { clusters: usize, points: usize },
    #[error("expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, UnsupervisedError>;
