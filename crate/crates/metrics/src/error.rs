use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{left} {left_len} entries but {right} {right_len}")]
    LengthMismatch {
        left: &'static str,
        left_len: usize,
        right: &'static str,
        right_len: usize,
    },

    #[error("label {label} outside the declared {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("silhouette needs between 2 and n-1 clusters, found {distinct} among {n} points")]
    DegenerateClustering { distinct: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
