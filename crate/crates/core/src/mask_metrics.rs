//! Mask-based alignment metrics: IoU, mask MAE and histogram correlation,
//! and the tiered mask score.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrqaError};
use crate::mask::TissueMask;
use crate::raster::RasterImage;

/// Tier thresholds `(min IoU, max MAE, min HC)` for scores 3, 2 and 1.
pub const MRQA_TIERS: [(u8, f64, f64, f64); 3] = [
    (3, 0.80, 0.07, 0.80),
    (2, 0.70, 0.10, 0.70),
    (1, 0.64, 0.11, 0.64),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskMetrics {
    pub iou: f64,
    pub mae: f64,
    pub hc_corr: f64,
    pub hc_overlap: f64,
    pub hc_cos: f64,
    pub hc: f64,
    pub m_q: u8,
}

fn same_dims(a: &TissueMask, b: &TissueMask) -> Result<()> {
    if a.dims() == b.dims() {
        Ok(())
    } else {
        Err(UrqaError::dims(a.dims(), b.dims()))
    }
}

/// |A ∩ B| / |A ∪ B|; 1 when both masks are empty.
pub fn iou(mf: &TissueMask, mr: &TissueMask) -> Result<f64> {
    same_dims(mf, mr)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in mf.bits().iter().zip(mr.bits()) {
        inter += (a & b) as usize;
        union += (a | b) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Fraction of pixels where the masks disagree.
pub fn mask_mae(mf: &TissueMask, mr: &TissueMask) -> Result<f64> {
    same_dims(mf, mr)?;
    let diff = mf
        .bits()
        .iter()
        .zip(mr.bits())
        .filter(|(a, b)| a != b)
        .count();
    Ok(diff as f64 / mf.bits().len() as f64)
}

/// Intensity histogram over tissue pixels, normalised to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedHistogram {
    pub bins: Vec<f64>,
    /// Set when the mask was empty and the histogram fell back to uniform.
    pub degenerate: bool,
}

/// Histogram of `image` at tissue pixels with `bins` equal-width bins over
/// `0..=255`. An empty mask yields a uniform histogram flagged degenerate.
pub fn histogram(
    image: &RasterImage,
    mask: &TissueMask,
    bins: usize,
) -> Result<NormalizedHistogram> {
    if !image.is_grayscale() {
        return Err(UrqaError::InvalidRaster(
            "histogram needs a grayscale raster".into(),
        ));
    }
    if image.dims() != mask.dims() {
        return Err(UrqaError::dims(image.dims(), mask.dims()));
    }
    if bins < 2 {
        return Err(UrqaError::InvalidConfig(
            "histogram needs at least 2 bins".into(),
        ));
    }
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    for (&v, &m) in image.pixels().iter().zip(mask.bits()) {
        if m == 1 {
            counts[v as usize * bins / 256] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Ok(NormalizedHistogram {
            bins: vec![1.0 / bins as f64; bins],
            degenerate: true,
        });
    }
    Ok(NormalizedHistogram {
        bins: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcTriple {
    pub corr: f64,
    pub overlap: f64,
    pub cos: f64,
    /// Largest of the three.
    pub hc: f64,
}

/// Pearson correlation, histogram intersection and cosine similarity of two
/// histograms with the same bin count. Zero-variance or zero-norm inputs
/// score 0 on the affected measure.
///
/// The intersection is divided by the larger histogram mass. For normalised
/// input that mass is 1 up to rounding, and dividing keeps identical
/// histograms at exactly 1.
pub fn hc_triple(hf: &[f64], hr: &[f64]) -> Result<HcTriple> {
    if hf.len() != hr.len() {
        return Err(UrqaError::LengthMismatch(hf.len(), hr.len()));
    }
    if hf.is_empty() {
        return Err(UrqaError::EmptyInput);
    }
    let n = hf.len() as f64;
    let mean_f = hf.iter().sum::<f64>() / n;
    let mean_r = hr.iter().sum::<f64>() / n;
    let (mut cov, mut var_f, mut var_r) = (0.0, 0.0, 0.0);
    let (mut overlap, mut dot, mut norm_f, mut norm_r) = (0.0, 0.0, 0.0, 0.0);
    let (mut mass_f, mut mass_r) = (0.0, 0.0);
    for (&f, &r) in hf.iter().zip(hr) {
        let (df, dr) = (f - mean_f, r - mean_r);
        cov += df * dr;
        var_f += df * df;
        var_r += dr * dr;
        overlap += f.min(r);
        mass_f += f;
        mass_r += r;
        dot += f * r;
        norm_f += f * f;
        norm_r += r * r;
    }
    let corr = if var_f > 0.0 && var_r > 0.0 {
        cov / (var_f * var_r).sqrt()
    } else {
        0.0
    };
    let cos = if norm_f > 0.0 && norm_r > 0.0 {
        dot / (norm_f * norm_r).sqrt()
    } else {
        0.0
    };
    let mass = f64::max(mass_f, mass_r);
    let overlap = if mass > 0.0 { overlap / mass } else { 0.0 };
    Ok(HcTriple {
        corr,
        overlap,
        cos,
        hc: corr.max(overlap).max(cos),
    })
}

/// Highest tier whose three conditions all hold, else 0.
pub fn score_mrqa(iou: f64, mae: f64, hc: f64) -> u8 {
    MRQA_TIERS
        .iter()
        .find(|&&(_, min_iou, max_mae, min_hc)| iou >= min_iou && mae <= max_mae && hc >= min_hc)
        .map_or(0, |&(score, ..)| score)
}

/// Everything the mask module reports for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskEvaluation {
    pub metrics: MaskMetrics,
    pub fixed_histogram_degenerate: bool,
    pub registered_histogram_degenerate: bool,
}

/// Computes all mask metrics for a fixed/registered pair of grayscale
/// rasters and their masks.
pub fn evaluate_masks(
    fixed: &RasterImage,
    registered: &RasterImage,
    mf: &TissueMask,
    mr: &TissueMask,
    bins: usize,
) -> Result<MaskEvaluation> {
    let iou = iou(mf, mr)?;
    let mae = mask_mae(mf, mr)?;
    let hf = histogram(fixed, mf, bins)?;
    let hr = histogram(registered, mr, bins)?;
    let hc = hc_triple(&hf.bins, &hr.bins)?;
    Ok(MaskEvaluation {
        metrics: MaskMetrics {
            iou,
            mae,
            hc_corr: hc.corr,
            hc_overlap: hc.overlap,
            hc_cos: hc.cos,
            hc: hc.hc,
            m_q: score_mrqa(iou, mae, hc.hc),
        },
        fixed_histogram_degenerate: hf.degenerate,
        registered_histogram_degenerate: hr.degenerate,
    })
}
