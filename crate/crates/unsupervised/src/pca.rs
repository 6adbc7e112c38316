//! Principal component analysis on row-major [N, D] matrices.
//!
//! Components come from a Jacobi eigendecomposition of whichever of the
//! covariance (D x D) or Gram (N x N) matrix is smaller, so wide inputs
//! (many more pixels than samples) cost no more than tall ones.

use fsem_core::Tensor;

use crate::error::{Result, UnsupervisedError};
use crate::jacobi::symmetric_eigen;
use crate::util::validate_points;

/// Component count used when the caller doesn't pick one, capped by
/// what the data supports.
pub const DEFAULT_COMPONENTS: usize = 180;

/// A fitted linear projection: the training mean, an orthonormal basis
/// of principal directions (columns of `components`), and the variance
/// each direction explains, sorted non-increasing.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Tensor<f64>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    /// Fit `k` principal directions to `x`.
    ///
    /// Centers the data, then takes the top-k eigenvectors of the
    /// sample covariance (denominator N-1). `k` must lie in
    /// 1..=min(N-1, D): beyond N-1 the centered data carries no
    /// variance, and beyond D there are no more directions.
    pub fn fit(x: &Tensor<f64>, k: usize) -> Result<Self> {
        let (n, d) = validate_points(x, "PCA", 2)?;
        let max_k = (n - 1).min(d);
        if k == 0 || k > max_k {
            return Err(UnsupervisedError::ComponentCountOutOfRange {
                requested: k,
                max: max_k,
            });
        }

        let mean = column_means(x, n, d);
        let centered = center(x, &mean);

        let (mut values, mut components) = if d <= n {
            covariance_eigen(&centered, n, d, k)?
        } else {
            gram_eigen(&centered, n, d, k)?
        };
        // Numerical noise can leave tiny negative variances on
        // directions the data doesn't span.
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        orient_columns(&mut components);
        Ok(Self {
            mean,
            components,
            explained_variance: values,
        })
    }

    /// Fit with the default component count, capped at what the data
    /// supports.
    pub fn fit_default(x: &Tensor<f64>) -> Result<Self> {
        let (n, d) = validate_points(x, "PCA", 2)?;
        let k = DEFAULT_COMPONENTS.min((n - 1).min(d));
        Self::fit(x, k)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// [D, k] matrix whose columns are the principal directions.
    pub fn components(&self) -> &Tensor<f64> {
        &self.components
    }

    /// Per-component variance, non-increasing.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.explained_variance.len()
    }

    /// Project rows of `x` onto the fitted directions: (x - mean) C.
    pub fn transform(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        let (_, d) = validate_points(x, "PCA transform", 1)?;
        if d != self.input_dim() {
            return Err(UnsupervisedError::DimensionMismatch {
                expected: self.input_dim(),
                got: d,
            });
        }
        let centered = center(x, &self.mean);
        centered.matmul(&self.components).map_err(Into::into)
    }

    /// Map projected rows back to the input space: z C^T + mean.
    pub fn reconstruct(&self, z: &Tensor<f64>) -> Result<Tensor<f64>> {
        let (n, k) = validate_points(z, "PCA reconstruct", 1)?;
        if k != self.output_dim() {
            return Err(UnsupervisedError::DimensionMismatch {
                expected: self.output_dim(),
                got: k,
            });
        }
        let d = self.input_dim();
        let mut out = Tensor::zeros(&[n, d]);
        for i in 0..n {
            let zi = z.row(i);
            let row = out.row_mut(i);
            for (j, r) in row.iter_mut().enumerate() {
                let mut acc = self.mean[j];
                for (c, &z_val) in zi.iter().enumerate() {
                    acc += z_val * self.components.at2(j, c);
                }
                *r = acc;
            }
        }
        Ok(out)
    }
}

fn column_means(x: &Tensor<f64>, n: usize, d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

fn center(x: &Tensor<f64>, mean: &[f64]) -> Tensor<f64> {
    let n = x.shape()[0];
    let mut out = x.clone();
    for i in 0..n {
        for (v, &m) in out.row_mut(i).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    out
}

/// Eigendecompose X'X / (N-1) directly. Directions are the
/// eigenvectors themselves.
fn covariance_eigen(
    centered: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
) -> Result<(Vec<f64>, Tensor<f64>)> {
    let scale = 1.0 / (n - 1) as f64;
    let mut cov = vec![0.0; d * d];
    for row in 0..n {
        let r = centered.row(row);
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += r[i] * r[j] * scale;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i * d + j] = cov[j * d + i];
        }
    }
    let cov = Tensor::from_vec(vec![d, d], cov).map_err(UnsupervisedError::Core)?;
    let (values, vectors) = symmetric_eigen(&cov)?;
    let mut comp = Tensor::zeros(&[d, k]);
    for r in 0..d {
        for c in 0..k {
            comp.set2(r, c, vectors.at2(r, c));
        }
    }
    Ok((values[..k].to_vec(), comp))
}

/// For wide data (D > N) eigendecompose the small Gram matrix XX'
/// instead: its nonzero eigenvalues match those of X'X, and each
/// direction is recovered as X'u / |X'u|.
fn gram_eigen(
    centered: &Tensor<f64>,
    n: usize,
    d: usize,
    k: usize,
) -> Result<(Vec<f64>, Tensor<f64>)> {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        let ri = centered.row(i);
        for j in i..n {
            let dot: f64 = ri.iter().zip(centered.row(j)).map(|(&a, &b)| a * b).sum();
            gram[i * n + j] = dot;
            gram[j * n + i] = dot;
        }
    }
    let gram = Tensor::from_vec(vec![n, n], gram).map_err(UnsupervisedError::Core)?;
    let (values, vectors) = symmetric_eigen(&gram)?;

    let scale = 1.0 / (n - 1) as f64;
    let floor = values.first().copied().unwrap_or(0.0).max(1.0) * 1e-12;
    let mut comp = Tensor::zeros(&[d, k]);
    let mut explained = Vec::with_capacity(k);
    for c in 0..k {
        if values[c] <= floor {
            return Err(UnsupervisedError::NumericalFailure(format!(
                "component {c} exceeds the numerical rank of the data; \
                 request at most {c} components"
            )));
        }
        let inv_len = 1.0 / values[c].sqrt();
        for r in 0..d {
            let mut acc = 0.0;
            for i in 0..n {
                acc += centered.at2(i, r) * vectors.at2(i, c);
            }
            comp.set2(r, c, acc * inv_len);
        }
        explained.push(values[c] * scale);
    }
    Ok((explained, comp))
}

/// Fix each column's sign so its largest-magnitude entry is positive
/// (ties: lowest row index). Without this the eigendecomposition's
/// arbitrary signs would leak into checkpoints and plots.
fn orient_columns(components: &mut Tensor<f64>) {
    let (d, k) = (components.shape()[0], components.shape()[1]);
    for c in 0..k {
        let mut best_row = 0;
        let mut best_abs = -1.0;
        for r in 0..d {
            let a = components.at2(r, c).abs();
            if a > best_abs {
                best_abs = a;
                best_row = r;
            }
        }
        if components.at2(best_row, c) < 0.0 {
            for r in 0..d {
                let v = components.at2(r, c);
                components.set2(r, c, -v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> Tensor<f64> {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn line_data_has_one_direction() {
        // Points on y = 2x: single direction (1, 2)/sqrt(5), second
        // variance exactly 0.
        let x = matrix(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0], &[-1.0, -2.0]]);
        let model = PcaModel::fit(&x, 2).unwrap();
        let s5 = 5.0f64.sqrt();
        assert!((model.components().at2(0, 0) - 1.0 / s5).abs() < 1e-9);
        assert!((model.components().at2(1, 0) - 2.0 / s5).abs() < 1e-9);
        assert!(model.explained_variance()[1].abs() < 1e-9);
    }

    #[test]
    fn three_collinear_points_variance_one() {
        // x-coordinates {0, 1, 2} have sample variance 1 with the N-1
        // denominator; y carries nothing.
        let x = matrix(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]]);
        let model = PcaModel::fit(&x, 2).unwrap();
        assert!((model.explained_variance()[0] - 1.0).abs() < 1e-12);
        assert!((model.components().at2(0, 0) - 1.0).abs() < 1e-12);
        assert!(model.components().at2(1, 0).abs() < 1e-12);
    }

    #[test]
    fn transforming_the_mean_gives_zero() {
        let x = matrix(&[&[1.0, 5.0, 2.0], &[3.0, 1.0, 8.0], &[2.0, 3.0, 2.0], &[0.0, 7.0, 4.0]]);
        let model = PcaModel::fit(&x, 2).unwrap();
        let mean_row = Tensor::from_rows(&[model.mean().to_vec()]).unwrap();
        let z = model.transform(&mean_row).unwrap();
        for &v in z.data() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_projection_preserves_distances() {
        let x = matrix(&[
            &[1.0, 0.0, 2.0],
            &[0.0, 3.0, 1.0],
            &[4.0, 1.0, 0.0],
            &[2.0, 2.0, 2.0],
            &[5.0, 0.5, 1.5],
        ]);
        let model = PcaModel::fit(&x, 3).unwrap();
        let z = model.transform(&x).unwrap();
        for i in 0..5 {
            for j in (i + 1)..5 {
                let orig = crate::util::sq_dist(x.row(i), x.row(j)).sqrt();
                let proj = crate::util::sq_dist(z.row(i), z.row(j)).sqrt();
                assert!((orig - proj).abs() < 1e-5, "pair ({i},{j}): {orig} vs {proj}");
            }
        }
    }

    #[test]
    fn full_rank_reconstruction_is_lossless() {
        let x = matrix(&[
            &[1.0, 0.0, 2.0],
            &[0.0, 3.0, 1.0],
            &[4.0, 1.0, 0.0],
            &[2.0, 2.0, 2.0],
        ]);
        let model = PcaModel::fit(&x, 3).unwrap();
        let z = model.transform(&x).unwrap();
        let back = model.reconstruct(&z).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn wide_data_components_are_orthonormal_and_ranked() {
        // D = 7 > N = 4 exercises the Gram path.
        let x = matrix(&[
            &[1.0, 0.0, 2.0, 3.0, 1.0, 0.5, 2.0],
            &[0.0, 3.0, 1.0, 0.0, 2.0, 1.5, 0.0],
            &[4.0, 1.0, 0.0, 1.0, 0.0, 2.5, 1.0],
            &[2.0, 2.0, 2.0, 2.0, 3.0, 0.0, 3.0],
        ]);
        let model = PcaModel::fit(&x, 3).unwrap();
        let c = model.components();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..7).map(|r| c.at2(r, i) * c.at2(r, j)).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9, "C'C[{i}{j}] = {dot}");
            }
        }
        // Projected column variances reproduce the explained variances
        // in order.
        let z = model.transform(&x).unwrap();
        for c in 0..3 {
            let mean: f64 = (0..4).map(|i| z.at2(i, c)).sum::<f64>() / 4.0;
            let var: f64 = (0..4).map(|i| (z.at2(i, c) - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(
                (var - model.explained_variance()[c]).abs() < 1e-9,
                "column {c}: {var} vs {}",
                model.explained_variance()[c]
            );
        }
    }

    #[test]
    fn component_count_is_bounded_by_rank_and_dims() {
        let x = matrix(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        assert!(PcaModel::fit(&x, 0).is_err());
        assert!(PcaModel::fit(&x, 3).is_err()); // min(N-1, D) = 2
        assert!(PcaModel::fit(&x, 2).is_ok());
    }

    #[test]
    fn default_fit_caps_at_data_limits() {
        let x = matrix(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0], &[2.0, 2.0, 0.0]]);
        let model = PcaModel::fit_default(&x).unwrap();
        assert_eq!(model.output_dim(), 2); // min(180, N-1=2, D=3)
    }

    #[test]
    fn transform_rejects_wrong_width() {
        let x = matrix(&[&[0.0, 1.0], &[1.0, 0.0], &[0.5, 0.5]]);
        let model = PcaModel::fit(&x, 1).unwrap();
        let bad = matrix(&[&[1.0, 2.0, 3.0]]);
        assert!(matches!(
            model.transform(&bad),
            Err(UnsupervisedError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }
}
