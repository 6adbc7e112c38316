use crate::error::{MetricsError, Result};

/// Mean silhouette coefficient over all points.
///
/// `data` is row-major with `dim` coordinates per point; `assignments`
/// gives each point's cluster id. For a point i with intra-cluster mean
/// distance a(i) (over the *other* members) and b(i) the smallest mean
/// distance to any other cluster, its coefficient is
/// (b - a) / max(a, b). Two conventions make the score total:
/// a singleton cluster member scores 0, and so does a point where
/// max(a, b) = 0 (all relevant distances vanish).
///
/// Needs at least 2 and at most n-1 distinct clusters — outside that
/// range the coefficient is undefined for every point.
pub fn silhouette_score(data: &[f64], dim: usize, assignments: &[usize]) -> Result<f64> {
    if dim == 0 {
        return Err(MetricsError::InvalidArgument(
            "points need at least one coordinate".into(),
        ));
    }
    if data.len() % dim != 0 {
        return Err(MetricsError::InvalidArgument(format!(
            "{} values do not divide into points of {dim} coordinates",
            data.len()
        )));
    }
    let n = data.len() / dim;
    if n != assignments.len() {
        return Err(MetricsError::LengthMismatch {
            left: "data holds",
            left_len: n,
            right: "assignments has",
            right_len: assignments.len(),
        });
    }

    let clusters = match assignments.iter().max() {
        Some(&top) => top + 1,
        None => {
            return Err(MetricsError::InvalidArgument(
                "cannot score an empty clustering".into(),
            ))
        }
    };
    let mut sizes = vec![0usize; clusters];
    for &c in assignments {
        sizes[c] += 1;
    }
    let distinct = sizes.iter().filter(|&&s| s > 0).count();
    if distinct < 2 || distinct > n - 1 {
        return Err(MetricsError::DegenerateClustering { distinct, n });
    }

    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if sizes[own] == 1 {
            continue; // singleton scores 0
        }
        // Sum of distances from i to every cluster in one pass.
        let mut dist_sums = vec![0.0f64; clusters];
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = euclidean(point(i), point(j));
            dist_sums[assignments[j]] += d;
        }
        let a = dist_sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clusters)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| dist_sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (xi - yi) * (xi - yi))
        .sum::<f64>()
        .sqrt()
}
