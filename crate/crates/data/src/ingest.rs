use crate::dataset::{ImageSample, LabeledDataset};
use crate::error::{DataError, Result};
use crate::pnm::{decode_pnm, to_grayscale};
use std::fs;
use std::path::Path;

/// What to do with multi-channel images at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorMode {
    /// Collapse to one channel by channel mean.
    #[default]
    Grayscale,
    /// Keep whatever channel count the file has.
    Keep,
}

/// Load a directory tree laid out as `root/<category>/<image files>`.
///
/// Categories are the immediate subdirectories in lexicographic order —
/// that order *is* the label assignment, so it must be stable across
/// machines. Files inside each category are also visited in lexicographic
/// order. Only `.pgm`, `.ppm`, and `.pnm` files (case-insensitive) are
/// considered; anything else is skipped. Each sample's `source_id` is its
/// path relative to `root`.
pub fn load_directory(root: &Path, color: ColorMode) -> Result<LabeledDataset> {
    let entries = fs::read_dir(root).map_err(|e| DataError::io(root, e))?;
    let mut categories: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| DataError::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            match path.file_name().and_then(|n| n.to_str()) {
                Some(name) => categories.push(name.to_string()),
                None => {
                    return Err(DataError::InvalidArgument(format!(
                        "category directory {path:?} has a non-UTF-8 name"
                    )))
                }
            }
        }
    }
    categories.sort();
    if categories.is_empty() {
        return Err(DataError::EmptyDataset(root.to_path_buf()));
    }

    let mut samples = Vec::new();
    for (label, name) in categories.iter().enumerate() {
        let dir = root.join(name);
        let mut files: Vec<_> = fs::read_dir(&dir)
            .map_err(|e| DataError::io(&dir, e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| DataError::io(&dir, e))?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file() && has_pnm_extension(p))
            .collect();
        files.sort();
        for file in files {
            let bytes = fs::read(&file).map_err(|e| DataError::io(&file, e))?;
            let decoded = decode_pnm(&file, &bytes)?;
            let pixels = match color {
                ColorMode::Grayscale => to_grayscale(&decoded)?,
                ColorMode::Keep => decoded,
            };
            samples.push(ImageSample {
                pixels,
                label: label as u32,
                source_id: format!("{name}/{}", file_name(&file)?),
            });
        }
    }
    if samples.is_empty() {
        return Err(DataError::EmptyDataset(root.to_path_buf()));
    }
    LabeledDataset::new(categories, samples)
}

fn has_pnm_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| {
            let e = e.to_ascii_lowercase();
            e == "pgm" || e == "ppm" || e == "pnm"
        })
        .unwrap_or(false)
}

fn file_name(path: &Path) -> Result<&str> {
    path.file_name().and_then(|n| n.to_str()).ok_or_else(|| {
        DataError::InvalidArgument(format!("file {path:?} has a non-UTF-8 name"))
    })
}
