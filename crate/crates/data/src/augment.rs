use crate::dataset::{ImageSample, LabeledDataset};
use crate::error::{DataError, Result};
use fsem_core::{derive_seed, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How sampling positions outside the source image are filled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FillMode {
    /// Clamp to the nearest edge pixel.
    #[default]
    Replicate,
    /// Use a constant value.
    Constant(f32),
}

/// Ranges for the random affine draw. All draws are symmetric around the
/// identity except zoom, which is uniform over its closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    /// Rotation bound in degrees; draws from `[-rotation_deg, rotation_deg]`.
    pub rotation_deg: f64,
    /// Horizontal shear bound; draws from `[-shear, shear]`.
    pub shear: f64,
    /// Zoom factor interval.
    pub zoom_range: (f64, f64),
    pub fill: FillMode,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            rotation_deg: 10.0,
            shear: 0.1,
            zoom_range: (0.9, 1.1),
            fill: FillMode::Replicate,
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<()> {
        if self.rotation_deg < 0.0 || !self.rotation_deg.is_finite() {
            return Err(DataError::InvalidArgument(format!(
                "rotation bound must be a finite non-negative angle, got {}",
                self.rotation_deg
            )));
        }
        if self.shear < 0.0 || !self.shear.is_finite() {
            return Err(DataError::InvalidArgument(format!(
                "shear bound must be finite and non-negative, got {}",
                self.shear
            )));
        }
        let (lo, hi) = self.zoom_range;
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo {
            return Err(DataError::InvalidArgument(format!(
                "zoom range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Draw one transform. The draw order (rotation, shear, zoom) is part
    /// of the reproducibility contract: reordering changes every stream.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> AffineTransform {
        let theta_deg = if self.rotation_deg == 0.0 {
            0.0
        } else {
            rng.gen_range(-self.rotation_deg..=self.rotation_deg)
        };
        let shear = if self.shear == 0.0 {
            0.0
        } else {
            rng.gen_range(-self.shear..=self.shear)
        };
        let (lo, hi) = self.zoom_range;
        let zoom = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        AffineTransform {
            theta_deg,
            shear,
            zoom,
        }
    }
}

/// A concrete rotate-shear-zoom about the image center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub theta_deg: f64,
    pub shear: f64,
    pub zoom: f64,
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        theta_deg: 0.0,
        shear: 0.0,
        zoom: 1.0,
    };
}

/// Apply rotation ∘ shear ∘ zoom about the image center, resampling with
/// bilinear interpolation. Output dimensions equal input dimensions.
///
/// Implemented by inverse mapping: each output pixel pulls from the
/// pre-image of its own coordinates, so the result has no holes. All
/// coordinate math runs in f64; only the final sample is rounded to f32.
pub fn apply_affine(
    img: &Tensor<f32>,
    transform: &AffineTransform,
    fill: FillMode,
) -> Result<Tensor<f32>> {
    let shape = img.shape();
    if shape.len() != 3 {
        return Err(DataError::InvalidArgument(format!(
            "expected [height, width, channels], got {shape:?}"
        )));
    }
    if transform.zoom <= 0.0 || !transform.zoom.is_finite() {
        return Err(DataError::InvalidArgument(format!(
            "zoom must be positive and finite, got {}",
            transform.zoom
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;

    // forward: p' = R(theta) * Sh(s) * Z(z) * p; inverse applied here
    let theta = transform.theta_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let s = transform.shear;
    let inv_z = 1.0 / transform.zoom;

    let mut out = Vec::with_capacity(h * w * c);
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let dx = x as f64 - cx;
            // R^-1
            let rx = cos * dx + sin * dy;
            let ry = -sin * dx + cos * dy;
            // Sh^-1: x' = x + s*y  =>  x = x' - s*y'
            let hx = rx - s * ry;
            let hy = ry;
            // Z^-1
            let sx = hx * inv_z + cx;
            let sy = hy * inv_z + cy;
            sample_bilinear(img, sy, sx, fill, &mut out);
        }
    }
    Ok(Tensor::from_vec(vec![h, w, c], out)?)
}

fn sample_bilinear(img: &Tensor<f32>, sy: f64, sx: f64, fill: FillMode, out: &mut Vec<f32>) {
    let shape = img.shape();
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    let data = img.data();
    match fill {
        FillMode::Replicate => {
            let sy = sy.clamp(0.0, (h - 1) as f64);
            let sx = sx.clamp(0.0, (w - 1) as f64);
            let y0 = sy.floor() as usize;
            let x0 = sx.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let x1 = (x0 + 1).min(w - 1);
            let fy = sy - y0 as f64;
            let fx = sx - x0 as f64;
            for ch in 0..c {
                let p00 = data[(y0 * w + x0) * c + ch] as f64;
                let p01 = data[(y0 * w + x1) * c + ch] as f64;
                let p10 = data[(y1 * w + x0) * c + ch] as f64;
                let p11 = data[(y1 * w + x1) * c + ch] as f64;
                let top = p00 * (1.0 - fx) + p01 * fx;
                let bottom = p10 * (1.0 - fx) + p11 * fx;
                out.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
        FillMode::Constant(v) => {
            let y0 = sy.floor() as isize;
            let x0 = sx.floor() as isize;
            let fy = sy - y0 as f64;
            let fx = sx - x0 as f64;
            let get = |yy: isize, xx: isize, ch: usize| -> f64 {
                if yy >= 0 && (yy as usize) < h && xx >= 0 && (xx as usize) < w {
                    data[(yy as usize * w + xx as usize) * c + ch] as f64
                } else {
                    v as f64
                }
            };
            for ch in 0..c {
                let top = get(y0, x0, ch) * (1.0 - fx) + get(y0, x0 + 1, ch) * fx;
                let bottom = get(y0 + 1, x0, ch) * (1.0 - fx) + get(y0 + 1, x0 + 1, ch) * fx;
                out.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
}

/// Grow a dataset by `round(fraction * len)` augmented copies, appended
/// after the originals.
///
/// The extra budget is spread across categories in proportion to their
/// size (largest-remainder rounding, ties to the lower label). Each
/// augmented sample gets its own generator seeded from `(seed, position)`,
/// so any sample can be regenerated without replaying the whole stream,
/// and the expansion is byte-deterministic for a given seed.
pub fn expand_dataset(
    ds: &LabeledDataset,
    fraction: f64,
    params: &AugmentParams,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(0.0..=10.0).contains(&fraction) {
        return Err(DataError::InvalidArgument(format!(
            "expansion fraction {fraction} outside [0, 10]"
        )));
    }
    params.validate()?;
    if ds.is_empty() {
        return Err(DataError::InvalidArgument(
            "cannot expand an empty dataset".into(),
        ));
    }
    let total = (fraction * ds.len() as f64).round() as usize;
    let mut expanded = ds.clone();
    if total == 0 {
        return Ok(expanded);
    }

    let counts = ds.category_counts();
    let quotas = largest_remainder_quotas(&counts, total, ds.len());
    let mut position = 0u64;
    for (label, quota) in quotas.iter().enumerate() {
        let members = ds.indices_of(label as u32);
        if *quota > 0 && members.is_empty() {
            return Err(DataError::CategoryTooSmall {
                name: ds.category_names()[label].clone(),
                count: 0,
                needed: 1,
                purpose: "augment from".into(),
            });
        }
        for _ in 0..*quota {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, position));
            let src = members[rng.gen_range(0..members.len())];
            let transform = params.draw(&mut rng);
            let original = &ds.samples()[src];
            let pixels = apply_affine(&original.pixels, &transform, params.fill)?;
            expanded.push(ImageSample {
                pixels,
                label: original.label,
                source_id: format!("{}#aug{position}", original.source_id),
            })?;
            position += 1;
        }
    }
    Ok(expanded)
}

/// Integer quotas proportional to `counts` summing exactly to `total`.
fn largest_remainder_quotas(counts: &[usize], total: usize, n: usize) -> Vec<usize> {
    let mut quotas: Vec<usize> = Vec::with_capacity(counts.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(counts.len());
    let mut assigned = 0usize;
    for (i, &cnt) in counts.iter().enumerate() {
        let exact = total as f64 * cnt as f64 / n as f64;
        let floor = exact.floor() as usize;
        quotas.push(floor);
        assigned += floor;
        remainders.push((exact - floor as f64, i));
    }
    // hand out the leftovers by descending remainder, lower label first on ties
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for k in 0..total.saturating_sub(assigned) {
        quotas[remainders[k % remainders.len()].1] += 1;
    }
    quotas
}
