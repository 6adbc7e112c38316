use fsem_core::Tensor;

/// What a clustering run found, with enough of its history to audit it.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// Cluster index per point, each < cluster count.
    pub assignments: Vec<usize>,
    /// Per-iteration objective: WCSS (non-increasing) for K-Means,
    /// log-likelihood (non-decreasing) for a mixture fit.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Whether the run stopped by its own criterion rather than the
    /// iteration cap.
    pub converged: bool,
    pub model: ClusterModel,
}

/// Fitted parameters, by algorithm.
#[derive(Debug, Clone)]
pub enum ClusterModel {
    KMeans {
        /// [K, d] cluster centers.
        centroids: Tensor<f64>,
    },
    Gmm {
        /// Mixing proportions, summing to 1.
        weights: Vec<f64>,
        /// [K, d] component means.
        means: Tensor<f64>,
        /// [K, d] per-dimension variances, each at or above the floor.
        variances: Tensor<f64>,
        /// [N, K] posterior membership probabilities, rows summing to 1.
        responsibilities: Tensor<f64>,
    },
}

impl ClusteringResult {
    pub fn cluster_count(&self) -> usize {
        match &self.model {
            ClusterModel::KMeans { centroids } => centroids.shape()[0],
            ClusterModel::Gmm { weights, .. } => weights.len(),
        }
    }

    /// Final objective value (last trace entry).
    pub fn objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("a finished run has at least one objective sample")
    }
}
