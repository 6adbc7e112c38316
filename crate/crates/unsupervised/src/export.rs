//! CSV export for point sets and their cluster assignments.

use fsem_core::Tensor;

use crate::error::{Result, UnsupervisedError};

/// Render points and assignments as CSV: a header row, then one line
/// per point holding its index, its coordinates, and its cluster.
/// Coordinate columns are named x, y, z up to three dimensions and
/// c0, c1, ... beyond that.
pub fn points_csv(points: &Tensor<f64>, assignments: &[usize]) -> Result<String> {
    if points.rank() != 2 {
        return Err(UnsupervisedError::InvalidArgument(format!(
            "CSV export expects a rank-2 [points, dims] matrix, got shape {:?}",
            points.shape()
        )));
    }
    let (n, d) = (points.shape()[0], points.shape()[1]);
    if assignments.len() != n {
        return Err(UnsupervisedError::InvalidArgument(format!(
            "{n} points but {} assignments",
            assignments.len()
        )));
    }

    let mut out = String::from("index");
    for c in 0..d {
        out.push(',');
        out.push_str(&coordinate_name(c, d));
    }
    out.push_str(",assignment\n");
    for i in 0..n {
        out.push_str(&i.to_string());
        for &v in points.row(i) {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push_str(&format!(",{}\n", assignments[i]));
    }
    Ok(out)
}

fn coordinate_name(index: usize, dims: usize) -> String {
    if dims <= 3 {
        ["x", "y", "z"][index].to_string()
    } else {
        format!("c{index}")
    }
}
