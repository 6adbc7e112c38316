use crate::error::{DataError, Result};
use fsem_core::Tensor;
use std::path::Path;

/// Decode a portable anymap (P2/P3 ASCII, P5/P6 binary) into `[H, W, C]`
/// pixels scaled to `[0, 1]` by the header's maxval.
///
/// Grayscale maps produce one channel, pixmaps three. Maxvals above 255
/// switch binary rasters to two-byte big-endian samples. `#` comments are
/// honoured anywhere in the header.
pub fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<Tensor<f32>> {
    let fail = |detail: String| DataError::Decode {
        path: path.to_path_buf(),
        detail,
    };

    let mut cursor = Cursor { bytes, pos: 0 };
    let magic = cursor.token().ok_or_else(|| fail("missing magic".into()))?;
    let (binary, channels) = match magic.as_str() {
        "P2" => (false, 1),
        "P3" => (false, 3),
        "P5" => (true, 1),
        "P6" => (true, 3),
        other => return Err(fail(format!("unsupported magic {other:?}"))),
    };

    let width = cursor
        .number()
        .ok_or_else(|| fail("missing or malformed width".into()))?;
    let height = cursor
        .number()
        .ok_or_else(|| fail("missing or malformed height".into()))?;
    let maxval = cursor
        .number()
        .ok_or_else(|| fail("missing or malformed maxval".into()))?;
    if width == 0 || height == 0 {
        return Err(fail(format!("degenerate dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(fail(format!("maxval {maxval} outside 1..=65535")));
    }

    let n = width * height * channels;
    let maxval_f = maxval as f32;
    let mut data = Vec::with_capacity(n);

    if binary {
        // exactly one whitespace byte separates maxval from the raster
        let raster = cursor
            .raster_after_single_whitespace()
            .ok_or_else(|| fail("missing whitespace before binary raster".into()))?;
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        if raster.len() < n * bytes_per {
            return Err(fail(format!(
                "raster truncated: {} bytes present, {} needed",
                raster.len(),
                n * bytes_per
            )));
        }
        for i in 0..n {
            let v = if bytes_per == 2 {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
            } else {
                raster[i] as usize
            };
            if v > maxval {
                return Err(fail(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f32 / maxval_f);
        }
    } else {
        for i in 0..n {
            let v = cursor
                .number()
                .ok_or_else(|| fail(format!("raster truncated at sample {i} of {n}")))?;
            if v > maxval {
                return Err(fail(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f32 / maxval_f);
        }
    }

    Ok(Tensor::from_vec(vec![height, width, channels], data)?)
}

/// Collapse three channels to one by the unweighted mean `(r + g + b) / 3`.
/// Single-channel input passes through untouched.
pub fn to_grayscale(img: &Tensor<f32>) -> Result<Tensor<f32>> {
    let shape = img.shape();
    if shape.len() != 3 {
        return Err(DataError::InvalidArgument(format!(
            "expected [height, width, channels], got {shape:?}"
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    match c {
        1 => Ok(img.clone()),
        3 => {
            let mut data = Vec::with_capacity(h * w);
            for px in img.data().chunks_exact(3) {
                data.push((px[0] + px[1] + px[2]) / 3.0);
            }
            Ok(Tensor::from_vec(vec![h, w, 1], data)?)
        }
        other => Err(DataError::InvalidArgument(format!(
            "cannot grayscale a {other}-channel image"
        ))),
    }
}

/// Encode a single- or three-channel image as a binary PGM/PPM with
/// maxval 255. Used by the synthetic generator and debugging dumps.
pub fn encode_pnm(img: &Tensor<f32>) -> Result<Vec<u8>> {
    let shape = img.shape();
    if shape.len() != 3 {
        return Err(DataError::InvalidArgument(format!(
            "expected [height, width, channels], got {shape:?}"
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    let magic = match c {
        1 => "P5",
        3 => "P6",
        other => {
            return Err(DataError::InvalidArgument(format!(
                "cannot encode a {other}-channel image"
            )))
        }
    };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.extend(
        img.data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<String> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        String::from_utf8(self.bytes[start..self.pos].to_vec()).ok()
    }

    fn number(&mut self) -> Option<usize> {
        self.token()?.parse().ok()
    }

    fn raster_after_single_whitespace(&mut self) -> Option<&'a [u8]> {
        if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
            Some(&self.bytes[self.pos..])
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("test.pnm")
    }

    #[test]
    fn ascii_graymap_decodes_scaled() {
        let src = b"P2\n# a comment\n2 2\n4\n0 1 2 4\n";
        let img = decode_pnm(&p(), src).unwrap();
        assert_eq!(img.shape(), &[2, 2, 1]);
        assert_eq!(img.data(), &[0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn binary_graymap_decodes() {
        let mut src = b"P5\n2 1\n255\n".to_vec();
        src.extend([0u8, 255]);
        let img = decode_pnm(&p(), &src).unwrap();
        assert_eq!(img.shape(), &[1, 2, 1]);
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn wide_maxval_uses_two_big_endian_bytes() {
        let mut src = b"P5\n1 1\n65535\n".to_vec();
        src.extend(32768u16.to_be_bytes());
        let img = decode_pnm(&p(), &src).unwrap();
        assert!((img.data()[0] - 32768.0 / 65535.0).abs() < 1e-7);
    }

    #[test]
    fn binary_pixmap_has_three_channels() {
        let mut src = b"P6\n1 1\n255\n".to_vec();
        src.extend([255u8, 0, 128]);
        let img = decode_pnm(&p(), &src).unwrap();
        assert_eq!(img.shape(), &[1, 1, 3]);
        assert_eq!(img.data()[0], 1.0);
        assert_eq!(img.data()[1], 0.0);
    }

    #[test]
    fn truncated_raster_names_the_file() {
        let src = b"P2\n2 2\n255\n1 2 3\n"; // one sample short
        let err = decode_pnm(Path::new("shapes/disk/007.pgm"), src).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("shapes/disk/007.pgm"), "got: {msg}");
        assert!(msg.contains("truncated"), "got: {msg}");
    }

    #[test]
    fn sample_above_maxval_is_rejected() {
        let src = b"P2\n1 1\n4\n5\n";
        assert!(decode_pnm(&p(), src).is_err());
    }

    #[test]
    fn bitmap_magic_is_unsupported() {
        let src = b"P4\n8 1\n\xff";
        let err = decode_pnm(&p(), src).unwrap_err();
        assert!(err.to_string().contains("P4"));
    }

    #[test]
    fn grayscale_is_channel_mean() {
        let img = Tensor::from_vec(vec![1, 1, 3], vec![0.3f32, 0.6, 0.9]).unwrap();
        let g = to_grayscale(&img).unwrap();
        assert_eq!(g.shape(), &[1, 1, 1]);
        assert!((g.data()[0] - 0.6).abs() < 1e-7);
    }

    #[test]
    fn encode_decode_round_trips_8bit_values() {
        let img = Tensor::from_vec(
            vec![2, 1, 1],
            vec![17.0f32 / 255.0, 200.0 / 255.0],
        )
        .unwrap();
        let bytes = encode_pnm(&img).unwrap();
        let back = decode_pnm(&p(), &bytes).unwrap();
        assert_eq!(back.data(), img.data());
    }
}
