//! Evaluation metrics for classifiers and clusterings.
//!
//! Three pieces: a confusion-matrix-based classification report
//! (accuracy plus per-category and macro precision/recall/F1), the mean
//! silhouette coefficient for judging cluster separation, and table
//! renderers that turn scored rows into CSV or aligned markdown.
//!
//! Everything works on plain slices and `f64` so callers don't need any
//! particular tensor type to score their outputs.

pub mod classification;
pub mod error;
pub mod silhouette;
pub mod tables;

pub use classification::{
    classification_report, report_from_confusion, CategoryScores, ClassificationReport,
    ConfusionMatrix,
};
pub use error::{MetricsError, Result};
pub use silhouette::silhouette_score;
pub use tables::{
    accuracy_table_csv, accuracy_table_markdown, silhouette_table_csv, silhouette_table_markdown,
    AccuracyRow, SilhouetteRow,
};
