use crate::dataset::{ImageSample, LabeledDataset};
use crate::error::{DataError, Result};
use fsem_core::Tensor;
use std::io::{Read, Write};

/// Four-byte tag opening every serialized dataset.
pub const DATASET_MAGIC: &[u8; 4] = b"FSDT";
/// Current container version.
pub const DATASET_VERSION: u32 = 1;

/// Serialize a dataset: magic, version, category-name table, then one
/// record per sample (label, dims, source id, little-endian f32 pixels).
/// Everything a loaded dataset exposes survives the trip bit-identically,
/// including category names and source ids.
pub fn save_dataset<W: Write>(ds: &LabeledDataset, out: &mut W) -> Result<()> {
    let io = |e: std::io::Error| DataError::Container(format!("write failed: {e}"));
    out.write_all(DATASET_MAGIC).map_err(io)?;
    out.write_all(&DATASET_VERSION.to_le_bytes()).map_err(io)?;
    out.write_all(&(ds.category_count() as u32).to_le_bytes())
        .map_err(io)?;
    for name in ds.category_names() {
        write_str(out, name)?;
    }
    out.write_all(&(ds.len() as u32).to_le_bytes()).map_err(io)?;
    for s in ds.samples() {
        let (h, w, c) = s.dims();
        out.write_all(&s.label.to_le_bytes()).map_err(io)?;
        for dim in [h, w, c] {
            out.write_all(&(dim as u32).to_le_bytes()).map_err(io)?;
        }
        write_str(out, &s.source_id)?;
        for &px in s.pixels.data() {
            out.write_all(&px.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Read a dataset previously written by [`save_dataset`].
pub fn load_dataset<R: Read>(input: &mut R) -> Result<LabeledDataset> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|e| DataError::Container(format!("too short for magic: {e}")))?;
    if &magic != DATASET_MAGIC {
        return Err(DataError::Container(format!(
            "bad magic {magic:?}, expected {DATASET_MAGIC:?} — not a dataset container"
        )));
    }
    let version = read_u32(input, "version")?;
    if version != DATASET_VERSION {
        return Err(DataError::Container(format!(
            "unsupported container version {version} (this build reads {DATASET_VERSION})"
        )));
    }
    let n_categories = read_u32(input, "category count")? as usize;
    let mut names = Vec::with_capacity(n_categories);
    for i in 0..n_categories {
        names.push(read_str(input, &format!("category name {i}"))?);
    }
    let n_samples = read_u32(input, "sample count")? as usize;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let label = read_u32(input, &format!("sample {i} label"))?;
        if label as usize >= n_categories {
            return Err(DataError::Container(format!(
                "sample {i} labeled {label} but only {n_categories} categories are declared"
            )));
        }
        let h = read_u32(input, &format!("sample {i} height"))? as usize;
        let w = read_u32(input, &format!("sample {i} width"))? as usize;
        let c = read_u32(input, &format!("sample {i} channels"))? as usize;
        let source_id = read_str(input, &format!("sample {i} source id"))?;
        let n_px = h * w * c;
        let mut raw = vec![0u8; n_px * 4];
        input.read_exact(&mut raw).map_err(|e| {
            DataError::Container(format!("sample {i} pixel payload truncated: {e}"))
        })?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        samples.push(ImageSample {
            pixels: Tensor::from_vec(vec![h, w, c], data)?,
            label,
            source_id,
        });
    }
    LabeledDataset::new(names, samples)
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    let io = |e: std::io::Error| DataError::Container(format!("write failed: {e}"));
    out.write_all(&(s.len() as u32).to_le_bytes()).map_err(io)?;
    out.write_all(s.as_bytes()).map_err(io)?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R, what: &str) -> Result<u32> {
    let mut bytes = [0u8; 4];
    input
        .read_exact(&mut bytes)
        .map_err(|e| DataError::Container(format!("truncated at {what}: {e}")))?;
    Ok(u32::from_le_bytes(bytes))
}

fn read_str<R: Read>(input: &mut R, what: &str) -> Result<String> {
    let len = read_u32(input, what)? as usize;
    let mut bytes = vec![0u8; len];
    input
        .read_exact(&mut bytes)
        .map_err(|e| DataError::Container(format!("truncated at {what}: {e}")))?;
    String::from_utf8(bytes)
        .map_err(|_| DataError::Container(format!("{what} is not valid UTF-8")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dataset() -> LabeledDataset {
        LabeledDataset::new(
            vec!["cross".into(), "disk".into()],
            vec![
                ImageSample {
                    pixels: Tensor::from_vec(vec![2, 2, 1], vec![0.0, 0.25, 0.5, 1.0]).unwrap(),
                    label: 0,
                    source_id: "cross/a.pgm".into(),
                },
                ImageSample {
                    pixels: Tensor::from_vec(vec![1, 2, 3], vec![0.1; 6]).unwrap(),
                    label: 1,
                    source_id: "disk/b.ppm".into(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_everything_bit_for_bit() {
        let ds = sample_dataset();
        let mut first = Vec::new();
        save_dataset(&ds, &mut first).unwrap();
        let loaded = load_dataset(&mut first.as_slice()).unwrap();
        assert_eq!(loaded.category_names(), ds.category_names());
        assert_eq!(loaded.len(), ds.len());
        for (a, b) in ds.samples().iter().zip(loaded.samples()) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.source_id, b.source_id);
            let bits_a: Vec<u32> = a.pixels.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u32> = b.pixels.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
        let mut second = Vec::new();
        save_dataset(&loaded, &mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let err = load_dataset(&mut &b"NOPE\x01\x00\x00\x00"[..]).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn truncation_is_reported_with_context() {
        let ds = sample_dataset();
        let mut bytes = Vec::new();
        save_dataset(&ds, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        let err = load_dataset(&mut bytes.as_slice()).unwrap_err();
        assert!(err.to_string().contains("truncated"), "got: {err}");
    }

    #[test]
    fn label_beyond_category_table_is_rejected() {
        // handcraft: one category, one sample labeled 7
        let mut bytes = Vec::new();
        bytes.extend_from_slice(DATASET_MAGIC);
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes()); // one category
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.push(b'x');
        bytes.extend_from_slice(&1u32.to_le_bytes()); // one sample
        bytes.extend_from_slice(&7u32.to_le_bytes()); // bad label
        let err = load_dataset(&mut bytes.as_slice()).unwrap_err();
        assert!(err.to_string().contains("labeled 7"), "got: {err}");
    }
}
