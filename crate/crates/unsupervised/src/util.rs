use fsem_core::Tensor;

use crate::error::{Result, UnsupervisedError};

/// Check that `x` is a finite rank-2 [N, d] matrix with at least
/// `min_points` rows and return (N, d).
pub(crate) fn validate_points(
    x: &Tensor<f64>,
    context: &'static str,
    min_points: usize,
) -> Result<(usize, usize)> {
    if x.rank() != 2 {
        return Err(UnsupervisedError::InvalidArgument(format!(
            "{context} expects a rank-2 [points, dims] matrix, got shape {:?}",
            x.shape()
        )));
    }
    let (n, d) = (x.shape()[0], x.shape()[1]);
    if n < min_points {
        return Err(UnsupervisedError::TooFewPoints {
            context,
            needed: min_points,
            got: n,
        });
    }
    if d == 0 {
        return Err(UnsupervisedError::InvalidArgument(format!(
            "{context} needs at least one coordinate per point"
        )));
    }
    if !x.all_finite() {
        return Err(UnsupervisedError::InvalidArgument(format!(
            "{context} input contains non-finite values"
        )));
    }
    Ok((n, d))
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}
