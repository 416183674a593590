//! Tissue masks: Otsu thresholding followed by morphological cleanup.
//!
//! The pipeline is fixed: threshold (tissue = the class on the configured
//! side of the Otsu level, threshold bin included), 3x3 closing, 3x3
//! opening, then removal of 8-connected components smaller than a fraction
//! of the raster. Pixels outside the raster are ignored by the min/max
//! filters, so a mask touching the border is not eroded by it.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::config::{EvalConfig, TissuePolarity};
use crate::error::{Result, UrqaError};
use crate::raster::RasterImage;

/// Binary tissue mask, row-major, 1 = tissue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TissueMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
    otsu_threshold: Option<u8>,
    degenerate: bool,
}

impl TissueMask {
    /// Wraps an existing 0/1 grid. Masks built this way carry no threshold.
    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(UrqaError::EmptyInput);
        }
        if bits.len() != width * height {
            return Err(UrqaError::LengthMismatch(width * height, bits.len()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(UrqaError::InvalidRaster(
                "mask values must be 0 or 1".into(),
            ));
        }
        Ok(TissueMask {
            width,
            height,
            bits,
            otsu_threshold: None,
            degenerate: false,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::from_bits(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Otsu level used to build the mask, on the polarity-adjusted scale.
    /// `None` for synthetic masks and single-intensity inputs.
    pub fn otsu_threshold(&self) -> Option<u8> {
        self.otsu_threshold
    }

    /// True when the source image had a single intensity level.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }
}

/// Mask-generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    pub polarity: TissuePolarity,
    pub min_component_fraction: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        MaskParams::from(&EvalConfig::default())
    }
}

impl From<&EvalConfig> for MaskParams {
    fn from(cfg: &EvalConfig) -> Self {
        MaskParams {
            polarity: cfg.tissue_polarity,
            min_component_fraction: cfg.min_component_fraction,
        }
    }
}

impl MaskParams {
    /// Smallest component size kept on a `width` x `height` raster.
    pub fn min_component_size(&self, width: usize, height: usize) -> usize {
        (self.min_component_fraction * (width * height) as f64).ceil() as usize
    }
}

fn require_gray(image: &RasterImage) -> Result<()> {
    if image.is_grayscale() {
        Ok(())
    } else {
        Err(UrqaError::InvalidRaster(format!(
            "expected a grayscale raster, got {} channels",
            image.channels()
        )))
    }
}

/// Between-class separation for the split `{<= t} | {> t}`, as the exact
/// fraction `num^2 / den`; the between-class variance is this over `N^3`.
fn separation(n0: u64, s0: u64, total: u64, sum: u64) -> (u128, u128) {
    let a = sum as u128 * n0 as u128;
    let b = total as u128 * s0 as u128;
    let num = a.abs_diff(b);
    let den = n0 as u128 * (total - n0) as u128;
    (num, den)
}

/// `lhs_num^2 / lhs_den > rhs_num^2 / rhs_den`, exactly.
fn separation_greater(lhs: (u128, u128), rhs: (u128, u128)) -> bool {
    let cross = |num: u128, other_den: u128| num.checked_mul(num)?.checked_mul(other_den);
    match (cross(lhs.0, rhs.1), cross(rhs.0, lhs.1)) {
        (Some(l), Some(r)) => l > r,
        _ => {
            let l = BigUint::from(lhs.0).pow(2) * BigUint::from(rhs.1);
            let r = BigUint::from(rhs.0).pow(2) * BigUint::from(lhs.1);
            l > r
        }
    }
}

/// Otsu threshold of an 8-bit grayscale raster: the level `t` in `0..=254`
/// maximising the between-class variance of `{<= t}` vs `{> t}`. Ties go to
/// the smallest `t`. The comparison is done in exact integer arithmetic.
pub fn otsu_threshold(image: &RasterImage) -> Result<u8> {
    require_gray(image)?;
    let mut hist = [0u64; 256];
    for &v in image.pixels() {
        hist[v as usize] += 1;
    }
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    if occupied < 2 {
        return Err(UrqaError::DegenerateImage {
            level: image.pixels()[0],
        });
    }
    let total: u64 = hist.iter().sum();
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best_t = 0u8;
    let mut best = (0u128, 1u128);
    let (mut n0, mut s0) = (0u64, 0u64);
    for (t, &count) in hist.iter().enumerate().take(255) {
        n0 += count;
        s0 += t as u64 * count;
        if n0 == 0 || n0 == total {
            continue;
        }
        let candidate = separation(n0, s0, total, sum);
        if separation_greater(candidate, best) {
            best = candidate;
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// Max (`dilate == true`) or min filter over the in-bounds 3x3 neighbourhood.
fn filter3x3(bits: &[u8], width: usize, height: usize, dilate: bool) -> Vec<u8> {
    let pick = |a: u8, b: u8| if dilate { a.max(b) } else { a.min(b) };
    let mut rows = vec![0u8; bits.len()];
    for y in 0..height {
        let row = &bits[y * width..(y + 1) * width];
        let out = &mut rows[y * width..(y + 1) * width];
        for x in 0..width {
            let mut v = row[x];
            if x > 0 {
                v = pick(v, row[x - 1]);
            }
            if x + 1 < width {
                v = pick(v, row[x + 1]);
            }
            out[x] = v;
        }
    }
    let mut out = vec![0u8; bits.len()];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut v = rows[i];
            if y > 0 {
                v = pick(v, rows[i - width]);
            }
            if y + 1 < height {
                v = pick(v, rows[i + width]);
            }
            out[i] = v;
        }
    }
    out
}

pub fn dilate(bits: &[u8], width: usize, height: usize) -> Vec<u8> {
    filter3x3(bits, width, height, true)
}

pub fn erode(bits: &[u8], width: usize, height: usize) -> Vec<u8> {
    filter3x3(bits, width, height, false)
}

/// 3x3 closing (dilate, then erode).
pub fn close(bits: &[u8], width: usize, height: usize) -> Vec<u8> {
    erode(&dilate(bits, width, height), width, height)
}

/// 3x3 opening (erode, then dilate).
pub fn open(bits: &[u8], width: usize, height: usize) -> Vec<u8> {
    dilate(&erode(bits, width, height), width, height)
}

/// Sizes of the 8-connected foreground components, and a per-pixel label
/// (0 = background, k = component `k - 1`).
pub fn label_components(bits: &[u8], width: usize, height: usize) -> (Vec<u32>, Vec<usize>) {
    let mut labels = vec![0u32; bits.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if bits[start] == 0 || labels[start] != 0 {
            continue;
        }
        sizes.push(0usize);
        let label = sizes.len() as u32;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            sizes[label as usize - 1] += 1;
            let (x, y) = (i % width, i / width);
            for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    let j = ny * width + nx;
                    if bits[j] == 1 && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, sizes)
}

/// Clears every 8-connected component with fewer than `min_size` pixels.
pub fn remove_small_components(
    bits: &[u8],
    width: usize,
    height: usize,
    min_size: usize,
) -> Vec<u8> {
    if min_size <= 1 {
        return bits.to_vec();
    }
    let (labels, sizes) = label_components(bits, width, height);
    labels
        .iter()
        .map(|&l| u8::from(l != 0 && sizes[l as usize - 1] >= min_size))
        .collect()
}

/// Thresholds and cleans a grayscale raster into a tissue mask.
/// Single-intensity rasters give an all-zero mask flagged as degenerate.
pub fn generate_mask(image: &RasterImage, params: &MaskParams) -> Result<TissueMask> {
    require_gray(image)?;
    let (width, height) = image.dims();
    let adjusted: Vec<u8> = match params.polarity {
        TissuePolarity::Dark => image.pixels().to_vec(),
        TissuePolarity::Bright => image.pixels().iter().map(|v| 255 - v).collect(),
    };
    let adjusted_image = RasterImage::new(width, height, 1, adjusted)?;
    let threshold = match otsu_threshold(&adjusted_image) {
        Ok(t) => t,
        Err(UrqaError::DegenerateImage { .. }) => {
            let mut mask = TissueMask::empty(width, height)?;
            mask.degenerate = true;
            return Ok(mask);
        }
        Err(e) => return Err(e),
    };

    let raw: Vec<u8> = adjusted_image
        .pixels()
        .iter()
        .map(|&v| u8::from(v <= threshold))
        .collect();
    let cleaned = open(&close(&raw, width, height), width, height);
    let bits = remove_small_components(
        &cleaned,
        width,
        height,
        params.min_component_size(width, height),
    );
    Ok(TissueMask {
        width,
        height,
        bits,
        otsu_threshold: Some(threshold),
        degenerate: false,
    })
}
