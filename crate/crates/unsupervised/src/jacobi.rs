//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Each sweep visits every off-diagonal pair (p, q) and applies the
//! rotation that zeroes that entry, accumulating the rotations into an
//! eigenvector matrix. Off-diagonal mass decays quadratically once the
//! matrix is nearly diagonal, so a handful of sweeps reaches machine
//! precision at the matrix sizes this crate works with. The eigenvector
//! matrix is a product of exact rotations and therefore orthonormal to
//! machine precision no matter when iteration stops.

use fsem_core::Tensor;

use crate::error::{Result, UnsupervisedError};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and the matching eigenvectors as columns of
/// an [n, n] matrix. The input must be symmetric; only its upper
/// triangle is trusted.
pub(crate) fn symmetric_eigen(matrix: &Tensor<f64>) -> Result<(Vec<f64>, Tensor<f64>)> {
    let shape = matrix.shape();
    if matrix.rank() != 2 || shape[0] != shape[1] {
        return Err(UnsupervisedError::InvalidArgument(format!(
            "eigendecomposition needs a square matrix, got shape {shape:?}"
        )));
    }
    let n = shape[0];
    let mut a = symmetrized(matrix, n);
    let mut v = identity(n);

    let frob_sq: f64 = a.iter().map(|x| x * x).sum();
    let mut converged = frob_sq == 0.0;
    for sweep in 0..MAX_SWEEPS {
        let off_sq: f64 = off_diagonal_sq(&a, n);
        if off_sq <= frob_sq * 1e-28 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Once an entry is negligible against its diagonal
                // neighbours, rotating on it only churns rounding noise.
                let g = 100.0 * apq.abs();
                if sweep > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = arp - s * (arq + tau * arp);
                    a[r * n + q] = arq + s * (arp - tau * arq);
                    a[p * n + r] = a[r * n + p];
                    a[q * n + r] = a[r * n + q];
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    if !converged && off_diagonal_sq(&a, n) > frob_sq * 1e-24 {
        return Err(UnsupervisedError::NumericalFailure(format!(
            "Jacobi iteration failed to diagonalize a {n}x{n} matrix in {MAX_SWEEPS} sweeps"
        )));
    }

    // Sort eigenpairs by descending eigenvalue; stable, so ties keep
    // their original relative order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].partial_cmp(&a[i * n + i]).expect("finite"));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + dst] = v[r * n + src];
        }
    }
    let vectors = Tensor::from_vec(vec![n, n], vectors).map_err(UnsupervisedError::Core)?;
    Ok((values, vectors))
}

/// Average the two triangles so tiny asymmetries from accumulated
/// rounding cannot bias the rotations.
fn symmetrized(matrix: &Tensor<f64>, n: usize) -> Vec<f64> {
    let m = matrix.data();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[i * n + j] + m[j * n + i]);
        }
    }
    a
}

fn identity(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

fn off_diagonal_sq(a: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            total += 2.0 * a[p * n + q] * a[p * n + q];
        }
    }
    total
}
