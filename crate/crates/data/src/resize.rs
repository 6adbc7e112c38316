use crate::error::{DataError, Result};
use fsem_core::Tensor;

/// Corner-aligned bilinear resample of an `[H, W, C]` image.
///
/// Output pixel `i` samples source position `i * (src - 1) / (dst - 1)`
/// (position 0 when the output axis has a single pixel), so the four
/// corners map exactly onto source corners and a same-size resize is the
/// identity down to the bit: every sampling position is then an integer
/// and the interpolation weights collapse to 1 and 0.
pub fn resize_bilinear(img: &Tensor<f32>, out_h: usize, out_w: usize) -> Result<Tensor<f32>> {
    let shape = img.shape();
    if shape.len() != 3 {
        return Err(DataError::InvalidArgument(format!(
            "expected [height, width, channels], got {shape:?}"
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    if h == 0 || w == 0 {
        return Err(DataError::InvalidArgument("cannot resize an empty image".into()));
    }
    if out_h == 0 || out_w == 0 {
        return Err(DataError::InvalidArgument(format!(
            "target size {out_h}x{out_w} has a zero axis"
        )));
    }

    let src_y = axis_positions(h, out_h);
    let src_x = axis_positions(w, out_w);
    let data = img.data();
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &src_y {
        for &(x0, x1, fx) in &src_x {
            let base00 = (y0 * w + x0) * c;
            let base01 = (y0 * w + x1) * c;
            let base10 = (y1 * w + x0) * c;
            let base11 = (y1 * w + x1) * c;
            for ch in 0..c {
                let p00 = data[base00 + ch] as f64;
                let p01 = data[base01 + ch] as f64;
                let p10 = data[base10 + ch] as f64;
                let p11 = data[base11 + ch] as f64;
                let top = p00 * (1.0 - fx) + p01 * fx;
                let bottom = p10 * (1.0 - fx) + p11 * fx;
                out.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    Ok(Tensor::from_vec(vec![out_h, out_w, c], out)?)
}

/// For each output index: the two source indices to blend and the weight
/// of the second one.
fn axis_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            let pos = if dst == 1 {
                0.0
            } else {
                i as f64 * (src - 1) as f64 / (dst - 1) as f64
            };
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            let frac = pos - lo as f64;
            (lo, hi, frac)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_size_resize_is_bit_identical() {
        let img = Tensor::from_vec(
            vec![2, 3, 1],
            vec![0.11f32, 0.27, 0.93, 0.05, 0.61, 0.47],
        )
        .unwrap();
        let out = resize_bilinear(&img, 2, 3).unwrap();
        let bits_in: Vec<u32> = img.data().iter().map(|v| v.to_bits()).collect();
        let bits_out: Vec<u32> = out.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_in, bits_out);
    }

    #[test]
    fn two_to_three_interpolates_midpoint() {
        // [0, 1] widened to three pixels: midpoint lands exactly between
        let img = Tensor::from_vec(vec![1, 2, 1], vec![0.0f32, 1.0]).unwrap();
        let out = resize_bilinear(&img, 1, 3).unwrap();
        assert_eq!(out.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn corners_map_to_corners() {
        let img = Tensor::from_vec(
            vec![2, 2, 1],
            vec![0.1f32, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let out = resize_bilinear(&img, 5, 7).unwrap();
        assert_eq!(out.data()[0], 0.1);
        assert_eq!(out.data()[6], 0.2);
        assert_eq!(out.data()[4 * 7], 0.3);
        assert_eq!(out.data()[4 * 7 + 6], 0.4);
    }

    #[test]
    fn downsample_averages_consistently() {
        // 3 -> 2 on a linear ramp keeps endpoints and stays within range
        let img = Tensor::from_vec(vec![1, 3, 1], vec![0.0f32, 0.5, 1.0]).unwrap();
        let out = resize_bilinear(&img, 1, 2).unwrap();
        assert_eq!(out.data(), &[0.0, 1.0]);
    }

    #[test]
    fn single_pixel_target_samples_origin() {
        let img = Tensor::from_vec(vec![2, 2, 1], vec![0.7f32, 0.1, 0.2, 0.9]).unwrap();
        let out = resize_bilinear(&img, 1, 1).unwrap();
        assert_eq!(out.data(), &[0.7]);
    }

    #[test]
    fn channels_resize_independently() {
        let img = Tensor::from_vec(vec![1, 2, 2], vec![0.0f32, 1.0, 1.0, 0.0]).unwrap();
        let out = resize_bilinear(&img, 1, 3).unwrap();
        assert_eq!(out.shape(), &[1, 3, 2]);
        assert_eq!(out.data(), &[0.0, 1.0, 0.5, 0.5, 1.0, 0.0]);
    }
}
