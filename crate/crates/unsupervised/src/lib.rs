//! Unsupervised analysis of embedding matrices: PCA for linear
//! dimensionality reduction, exact t-SNE for 2-D layouts, and K-Means
//! and diagonal-covariance GMM clustering, plus CSV export of the
//! results.
//!
//! Every fit is a pure function of its inputs and a seed — run it twice
//! and the bits match — and every iterative algorithm returns its
//! objective trace so callers can audit convergence instead of trusting
//! it.

pub mod error;
pub mod export;
pub mod gmm;
mod jacobi;
pub mod kmeans;
pub mod pca;
pub mod result;
pub mod tsne;
mod util;

pub use error::{Result, UnsupervisedError};
pub use export::points_csv;
pub use gmm::{gmm_assign, gmm_fit, hard_assignments, GmmConfig};
pub use kmeans::{kmeans, KmeansConfig, KmeansInit};
pub use pca::{PcaModel, DEFAULT_COMPONENTS};
pub use result::{ClusterModel, ClusteringResult};
pub use tsne::{conditional_affinities, tsne, TsneConfig, TsneEmbedding};
