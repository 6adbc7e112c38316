//! Diagonal-covariance Gaussian mixtures fit by expectation-maximization.
//!
//! The E step computes posterior responsibilities through log-sum-exp so
//! distant points can't underflow everything to zero; the M step
//! re-estimates weights, means, and per-dimension variances from those
//! responsibilities, flooring variances so duplicated points can't
//! collapse a component. Initial parameters come from a seeded K-Means
//! run, which kills most degenerate starts.

use fsem_core::Tensor;

use crate::error::{Result, UnsupervisedError};
use crate::kmeans::{kmeans, KmeansConfig};
use crate::result::{ClusterModel, ClusteringResult};
use crate::util::validate_points;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone)]
pub struct GmmConfig {
    pub components: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once one EM step improves log-likelihood by less than this.
    pub tol: f64,
    /// Lower bound applied to every fitted variance.
    pub variance_floor: f64,
}

impl GmmConfig {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            seed: 0,
            max_iters: 200,
            tol: 1e-6,
            variance_floor: 1e-6,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub fn gmm_fit(x: &Tensor<f64>, config: &GmmConfig) -> Result<ClusteringResult> {
    let (n, d) = validate_points(x, "GMM", 2)?;
    let k = config.components;
    if k == 0 || k > n {
        return Err(UnsupervisedError::ClusterCountOutOfRange {
            clusters: k,
            points: n,
        });
    }
    if !(config.tol >= 0.0 && config.variance_floor > 0.0) {
        return Err(UnsupervisedError::InvalidArgument(
            "GMM needs tol >= 0 and a positive variance floor".into(),
        ));
    }

    let (mut weights, mut means, mut variances) = initial_parameters(x, n, d, config)?;

    let mut responsibilities = Tensor::zeros(&[n, k]);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let ll = e_step(x, n, k, &weights, &means, &variances, &mut responsibilities);
        let improved_below_tol = trace.last().is_some_and(|&prev| ll - prev < config.tol);
        trace.push(ll);
        if improved_below_tol {
            converged = true;
            break;
        }
        m_step(x, n, d, k, &responsibilities, &mut weights, &mut means, &mut variances, config.variance_floor);
    }

    let assignments = hard_assignments(&responsibilities);
    Ok(ClusteringResult {
        assignments,
        objective_trace: trace,
        iterations,
        converged,
        model: ClusterModel::Gmm {
            weights,
            means,
            variances,
            responsibilities,
        },
    })
}

/// Argmax responsibility per point; ties go to the lowest component.
pub fn gmm_assign(result: &ClusteringResult) -> Result<Vec<usize>> {
    match &result.model {
        ClusterModel::Gmm { responsibilities, .. } => Ok(hard_assignments(responsibilities)),
        ClusterModel::KMeans { .. } => Err(UnsupervisedError::InvalidArgument(
            "gmm_assign needs a mixture fit, got a K-Means result".into(),
        )),
    }
}

/// Row-wise argmax with ties resolved to the lowest index.
pub fn hard_assignments(responsibilities: &Tensor<f64>) -> Vec<usize> {
    let (n, k) = (responsibilities.shape()[0], responsibilities.shape()[1]);
    (0..n)
        .map(|i| {
            let mut best = 0;
            let mut best_r = f64::NEG_INFINITY;
            for c in 0..k {
                let r = responsibilities.at2(i, c);
                if r > best_r {
                    best_r = r;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Seeded K-Means provides the starting point: cluster shares as
/// weights, centroids as means, within-cluster spread as variances.
fn initial_parameters(
    x: &Tensor<f64>,
    n: usize,
    d: usize,
    config: &GmmConfig,
) -> Result<(Vec<f64>, Tensor<f64>, Tensor<f64>)> {
    let k = config.components;
    let seeding = kmeans(
        x,
        &KmeansConfig::new(k).with_seed(config.seed).with_restarts(4),
    )?;
    let ClusterModel::KMeans { centroids } = &seeding.model else {
        unreachable!("kmeans always returns centroids");
    };

    let mut counts = vec![0usize; k];
    for &a in &seeding.assignments {
        counts[a] += 1;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

    let mut variances: Tensor<f64> = Tensor::zeros(&[k, d]);
    for i in 0..n {
        let c = seeding.assignments[i];
        for (j, (&v, &m)) in x.row(i).iter().zip(centroids.row(c)).enumerate() {
            let diff = v - m;
            let cur = variances.at2(c, j);
            variances.set2(c, j, cur + diff * diff);
        }
    }
    for c in 0..k {
        let inv = 1.0 / counts[c].max(1) as f64;
        for j in 0..d {
            let v = (variances.at2(c, j) * inv).max(config.variance_floor);
            variances.set2(c, j, v);
        }
    }
    Ok((weights, centroids.clone(), variances))
}

/// Fill responsibilities and return the total log-likelihood.
#[allow(clippy::too_many_arguments)]
fn e_step(
    x: &Tensor<f64>,
    n: usize,
    k: usize,
    weights: &[f64],
    means: &Tensor<f64>,
    variances: &Tensor<f64>,
    responsibilities: &mut Tensor<f64>,
) -> f64 {
    let mut log_joint = vec![0.0f64; k];
    let mut ll = 0.0;
    for i in 0..n {
        let xi = x.row(i);
        for c in 0..k {
            let mut acc = if weights[c] > 0.0 {
                weights[c].ln()
            } else {
                f64::NEG_INFINITY
            };
            for (j, &v) in xi.iter().enumerate() {
                let var = variances.at2(c, j);
                let diff = v - means.at2(c, j);
                acc -= 0.5 * (LN_2PI + var.ln() + diff * diff / var);
            }
            log_joint[c] = acc;
        }
        let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = log_joint.iter().map(|&l| (l - max).exp()).sum();
        let log_evidence = max + sum_exp.ln();
        ll += log_evidence;
        for c in 0..k {
            responsibilities.set2(i, c, (log_joint[c] - log_evidence).exp());
        }
    }
    ll
}

#[allow(clippy::too_many_arguments)]
fn m_step(
    x: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
    responsibilities: &Tensor<f64>,
    weights: &mut [f64],
    means: &mut Tensor<f64>,
    variances: &mut Tensor<f64>,
    variance_floor: f64,
) {
    let mut totals = vec![0.0f64; k];
    for i in 0..n {
        for (c, t) in totals.iter_mut().enumerate() {
            *t += responsibilities.at2(i, c);
        }
    }
    for c in 0..k {
        weights[c] = totals[c] / n as f64;
        if totals[c] <= 0.0 {
            // A component that no point supports keeps its parameters;
            // its zero weight already removes it from the mixture.
            continue;
        }
        let inv = 1.0 / totals[c];
        let mut mean = vec![0.0f64; d];
        for i in 0..n {
            let r = responsibilities.at2(i, c);
            for (m, &v) in mean.iter_mut().zip(x.row(i)) {
                *m += r * v;
            }
        }
        for m in &mut mean {
            *m *= inv;
        }
        let mut var = vec![0.0f64; d];
        for i in 0..n {
            let r = responsibilities.at2(i, c);
            for ((slot, &v), &m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                let diff = v - m;
                *slot += r * diff * diff;
            }
        }
        for (j, (&m, &v)) in mean.iter().zip(&var).enumerate() {
            means.set2(c, j, m);
            variances.set2(c, j, (v * inv).max(variance_floor));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_component_matches_closed_form() {
        let x = Tensor::from_rows(&[
            vec![1.0, 10.0],
            vec![2.0, 20.0],
            vec![3.0, 30.0],
            vec![4.0, 40.0],
        ])
        .unwrap();
        let result = gmm_fit(&x, &GmmConfig::new(1)).unwrap();
        let ClusterModel::Gmm { weights, means, variances, .. } = &result.model else {
            panic!("gmm returns mixture model");
        };
        assert_eq!(weights, &[1.0]);
        // Sample mean and biased (/N) variance per dimension.
        assert!((means.at2(0, 0) - 2.5).abs() < 1e-9);
        assert!((means.at2(0, 1) - 25.0).abs() < 1e-9);
        assert!((variances.at2(0, 0) - 1.25).abs() < 1e-9);
        assert!((variances.at2(0, 1) - 125.0).abs() < 1e-9);
    }

    #[test]
    fn far_blobs_get_confident_responsibilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut rows = Vec::new();
        for blob in 0..2 {
            let off = blob as f64 * 20.0;
            for _ in 0..15 {
                rows.push(vec![
                    off + rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]);
            }
        }
        let x = Tensor::from_rows(&rows).unwrap();
        let result = gmm_fit(&x, &GmmConfig::new(2).with_seed(3)).unwrap();
        let ClusterModel::Gmm { responsibilities, .. } = &result.model else {
            panic!("gmm returns mixture model");
        };
        // Each point must be near-certain about its own blob.
        for i in 0..30 {
            let own = result.assignments[i];
            assert!(
                responsibilities.at2(i, own) > 0.999,
                "point {i}: {}",
                responsibilities.at2(i, own)
            );
        }
        // The two halves land in different components.
        assert_eq!(result.assignments[..15], vec![result.assignments[0]; 15]);
        assert_eq!(result.assignments[15..], vec![result.assignments[15]; 15]);
        assert_ne!(result.assignments[0], result.assignments[15]);
    }

    #[test]
    fn log_likelihood_never_falls() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        let x = Tensor::from_rows(&rows).unwrap();
        let result = gmm_fit(&x, &GmmConfig::new(3).with_seed(8)).unwrap();
        for w in result.objective_trace.windows(2) {
            let slack = 1e-9 * w[0].abs().max(1.0);
            assert!(w[1] >= w[0] - slack, "log-likelihood fell: {w:?}");
        }
        assert!(result.converged);
    }

    #[test]
    fn weights_sum_to_one_and_variances_respect_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut rows: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        // Duplicated points try to collapse a component.
        rows.extend(vec![vec![0.5, 0.5]; 6]);
        let x = Tensor::from_rows(&rows).unwrap();
        let config = GmmConfig::new(3).with_seed(4);
        let result = gmm_fit(&x, &config).unwrap();
        let ClusterModel::Gmm { weights, variances, .. } = &result.model else {
            panic!("gmm returns mixture model");
        };
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for &v in variances.data() {
            assert!(v >= config.variance_floor);
        }
    }

    #[test]
    fn tie_breaks_to_the_lowest_component() {
        let resp = Tensor::from_rows(&[vec![0.5, 0.5], vec![0.1, 0.7]]).unwrap();
        // Widen the second row to 3 columns for a middle argmax check.
        assert_eq!(hard_assignments(&resp), vec![0, 1]);
        let resp3 = Tensor::from_rows(&[vec![0.1, 0.7, 0.2]]).unwrap();
        assert_eq!(hard_assignments(&resp3), vec![1]);
    }

    #[test]
    fn agrees_with_kmeans_on_far_corners() {
        let x = Tensor::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ])
        .unwrap();
        let gmm = gmm_fit(&x, &GmmConfig::new(2).with_seed(1)).unwrap();
        let km = kmeans(&x, &KmeansConfig::new(2).with_seed(1)).unwrap();
        // Same partition, allowing for swapped cluster ids.
        let agree = (0..4).all(|i| (gmm.assignments[i] == gmm.assignments[0]) == (km.assignments[i] == km.assignments[0]));
        assert!(agree, "gmm {:?} vs kmeans {:?}", gmm.assignments, km.assignments);
    }

    #[test]
    fn cluster_count_bounds_are_enforced() {
        let x = Tensor::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(gmm_fit(&x, &GmmConfig::new(3)).is_err());
        assert!(gmm_fit(&x, &GmmConfig::new(0)).is_err());
    }
}
