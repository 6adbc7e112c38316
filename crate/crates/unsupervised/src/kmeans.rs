//! Lloyd's K-Means: assign each point to its nearest centroid, recompute
//! centroids as cluster means, repeat until assignments stop changing.

use fsem_core::{derive_seed, Tensor};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, UnsupervisedError};
use crate::result::{ClusterModel, ClusteringResult};
use crate::util::{sq_dist, validate_points};

/// How initial centroids are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KmeansInit {
    /// K distinct data points drawn uniformly.
    #[default]
    RandomPoints,
    /// k-means++: each next center drawn proportionally to squared
    /// distance from the nearest already-chosen one.
    PlusPlus,
}

#[derive(Debug, Clone)]
pub struct KmeansConfig {
    pub clusters: usize,
    pub init: KmeansInit,
    pub seed: u64,
    pub max_iters: usize,
    /// Independent runs; the one with the lowest final WCSS wins.
    pub restarts: usize,
}

impl KmeansConfig {
    pub fn new(clusters: usize) -> Self {
        Self {
            clusters,
            init: KmeansInit::default(),
            seed: 0,
            max_iters: 100,
            restarts: 8,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

pub fn kmeans(x: &Tensor<f64>, config: &KmeansConfig) -> Result<ClusteringResult> {
    let (n, d) = validate_points(x, "K-Means", 1)?;
    let k = config.clusters;
    if k == 0 || k > n {
        return Err(UnsupervisedError::ClusterCountOutOfRange {
            clusters: k,
            points: n,
        });
    }
    if config.restarts == 0 || config.max_iters == 0 {
        return Err(UnsupervisedError::InvalidArgument(
            "K-Means needs at least one restart and one iteration".into(),
        ));
    }

    let mut best: Option<ClusteringResult> = None;
    for restart in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, restart as u64));
        let run = single_run(x, n, d, k, config, &mut rng);
        let better = match &best {
            None => true,
            Some(b) => run.objective() < b.objective(),
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

fn single_run(
    x: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
    config: &KmeansConfig,
    rng: &mut ChaCha8Rng,
) -> ClusteringResult {
    let mut centroids = match config.init {
        KmeansInit::RandomPoints => init_random_points(x, n, d, k, rng),
        KmeansInit::PlusPlus => init_plus_plus(x, n, d, k, rng),
    };

    let mut assignments: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let mut next = assign_nearest(x, n, &centroids, k);
        repair_empty_clusters(x, n, k, &mut next, &mut centroids);
        trace.push(wcss(x, n, &next, &centroids));
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
        recompute_centroids(x, n, d, k, &assignments, &mut centroids);
    }

    ClusteringResult {
        assignments,
        objective_trace: trace,
        iterations,
        converged,
        model: ClusterModel::KMeans { centroids },
    }
}

fn init_random_points(
    x: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Tensor<f64> {
    let chosen = sample(rng, n, k);
    let mut centroids = Tensor::zeros(&[k, d]);
    for (c, i) in chosen.into_iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(x.row(i));
    }
    centroids
}

fn init_plus_plus(
    x: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Tensor<f64> {
    let mut centroids = Tensor::zeros(&[k, d]);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut nearest_sq: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            // Walk the cumulative squared distances to a uniform draw.
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // Every remaining point coincides with a chosen center.
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, slot) in nearest_sq.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    centroids
}

/// Nearest centroid per point; ties go to the lowest cluster index.
fn assign_nearest(x: &Tensor<f64>, n: usize, centroids: &Tensor<f64>, k: usize) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = sq_dist(x.row(i), centroids.row(c));
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Give every empty cluster the point currently farthest from its own
/// centroid (ties: lowest point index), skipping points that are the
/// sole member of their cluster so the repair can't empty another one.
fn repair_empty_clusters(
    x: &Tensor<f64>,
    n: usize,
    k: usize,
    assignments: &mut [usize],
    centroids: &mut Tensor<f64>,
) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut donor = None;
        let mut donor_dist = -1.0;
        for i in 0..n {
            if sizes[assignments[i]] < 2 {
                continue;
            }
            let dist = sq_dist(x.row(i), centroids.row(assignments[i]));
            if dist > donor_dist {
                donor_dist = dist;
                donor = Some(i);
            }
        }
        let donor = donor.expect("an empty cluster implies another has two members");
        sizes[assignments[donor]] -= 1;
        sizes[c] = 1;
        let point = x.row(donor).to_vec();
        centroids.row_mut(c).copy_from_slice(&point);
        assignments[donor] = c;
    }
}

fn recompute_centroids(
    x: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
    assignments: &[usize],
    centroids: &mut Tensor<f64>,
) {
    let mut sums = vec![0.0f64; k * d];
    let mut counts = vec![0usize; k];
    for i in 0..n {
        let c = assignments[i];
        counts[c] += 1;
        for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue; // repaired clusters always have a member; keep defensive
        }
        let inv = 1.0 / counts[c] as f64;
        for (slot, &s) in centroids.row_mut(c).iter_mut().zip(&sums[c * d..(c + 1) * d]) {
            *slot = s * inv;
        }
    }
}

pub(crate) fn wcss(x: &Tensor<f64>, n: usize, assignments: &[usize], centroids: &Tensor<f64>) -> f64 {
    (0..n)
        .map(|i| sq_dist(x.row(i), centroids.row(assignments[i])))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_corners() -> Tensor<f64> {
        Tensor::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn recovers_the_obvious_two_clusters() {
        // Brute force over all 2-partitions of these 4 points puts the
        // optimum at centroids (0, 0.5) and (10, 0.5) with WCSS 1.0.
        let result = kmeans(&four_corners(), &KmeansConfig::new(2).with_restarts(10)).unwrap();
        assert!((result.objective() - 1.0).abs() < 1e-12);
        assert_eq!(result.assignments[0], result.assignments[1]);
        assert_eq!(result.assignments[2], result.assignments[3]);
        assert_ne!(result.assignments[0], result.assignments[2]);
        let ClusterModel::KMeans { centroids } = &result.model else {
            panic!("kmeans returns centroid model");
        };
        let mut centers: Vec<Vec<f64>> = (0..2).map(|c| centroids.row(c).to_vec()).collect();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(centers[0], vec![0.0, 0.5]);
        assert_eq!(centers[1], vec![10.0, 0.5]);
        assert!(result.converged);
    }

    #[test]
    fn one_cluster_per_point_has_zero_wcss() {
        let result = kmeans(&four_corners(), &KmeansConfig::new(4)).unwrap();
        assert_eq!(result.objective(), 0.0);
        let mut seen = result.assignments.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn trace_is_monotone_non_increasing() {
        let result = kmeans(&four_corners(), &KmeansConfig::new(2)).unwrap();
        for w in result.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trace rose: {w:?}");
        }
    }

    #[test]
    fn same_seed_is_deterministic() {
        let x = four_corners();
        let config = KmeansConfig::new(2).with_seed(9);
        let a = kmeans(&x, &config).unwrap();
        let b = kmeans(&x, &config).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn plus_plus_also_finds_the_optimum() {
        let mut config = KmeansConfig::new(2).with_restarts(10);
        config.init = KmeansInit::PlusPlus;
        let result = kmeans(&four_corners(), &config).unwrap();
        assert!((result.objective() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters_is_rejected() {
        assert!(matches!(
            kmeans(&four_corners(), &KmeansConfig::new(5)),
            Err(UnsupervisedError::ClusterCountOutOfRange { clusters: 5, points: 4 })
        ));
        assert!(kmeans(&four_corners(), &KmeansConfig::new(0)).is_err());
    }

    #[test]
    fn duplicated_points_still_yield_k_clusters() {
        // Eight copies of two distinct locations, K = 3: the repair path
        // must still produce three non-empty clusters.
        let mut rows = vec![vec![0.0, 0.0]; 4];
        rows.extend(vec![vec![5.0, 5.0]; 4]);
        let x = Tensor::from_rows(&rows).unwrap();
        let result = kmeans(&x, &KmeansConfig::new(3)).unwrap();
        let mut sizes = vec![0usize; 3];
        for &a in &result.assignments {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0), "sizes {sizes:?}");
    }
}
