//! Synthetic fields, masks and images with known properties, for tests,
//! the acceptance suite and `urqa synth`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UrqaError};
use crate::field::DeformationField;
use crate::mask::TissueMask;
use crate::raster::RasterImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    Identity,
    Translation {
        tx: f64,
        ty: f64,
    },
    /// `u = A x + b` with `x = (column, row)`.
    Affine {
        a: [[f64; 2]; 2],
        b: [f64; 2],
    },
    SmoothElastic {
        amplitude: f64,
        wavelength: f64,
    },
    /// Affine with `det(I + A) < 0`.
    Folded {
        a: [[f64; 2]; 2],
        b: [f64; 2],
    },
    SpikeNoise {
        count: usize,
        magnitude: f64,
    },
    Checkerboard {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(flatten)]
    pub kind: FieldKind,
    pub size: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(kind: FieldKind, size: usize, seed: u64) -> Self {
        SynthSpec { kind, size, seed }
    }
}

fn invalid(msg: impl Into<String>) -> UrqaError {
    UrqaError::InvalidSpec(msg.into())
}

fn finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn affine_field(n: usize, a: [[f64; 2]; 2], b: [f64; 2]) -> Result<DeformationField> {
    DeformationField::from_fn(n, n, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (
            a[0][0] * x + a[0][1] * y + b[0],
            a[1][0] * x + a[1][1] * y + b[1],
        )
    })
}

/// Generates the field described by `spec` on a `size` x `size` grid.
pub fn make_field(spec: &SynthSpec) -> Result<DeformationField> {
    let n = spec.size;
    if n < 3 {
        return Err(invalid(format!("size {n} is below the 3 px minimum")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        FieldKind::Identity => DeformationField::zeros(n, n),
        FieldKind::Translation { tx, ty } => {
            finite("translation", &[tx, ty])?;
            DeformationField::from_fn(n, n, |_, _| (tx, ty))
        }
        FieldKind::Affine { a, b } => {
            finite("affine", &[a[0][0], a[0][1], a[1][0], a[1][1], b[0], b[1]])?;
            affine_field(n, a, b)
        }
        FieldKind::Folded { a, b } => {
            finite("affine", &[a[0][0], a[0][1], a[1][0], a[1][1], b[0], b[1]])?;
            let det = (1.0 + a[0][0]) * (1.0 + a[1][1]) - a[0][1] * a[1][0];
            if det >= 0.0 {
                return Err(invalid(format!(
                    "folded field needs det(I + A) < 0, got {det}"
                )));
            }
            affine_field(n, a, b)
        }
        FieldKind::SmoothElastic {
            amplitude,
            wavelength,
        } => {
            finite("smooth_elastic", &[amplitude, wavelength])?;
            if wavelength <= 0.0 {
                return Err(invalid("wavelength must be positive"));
            }
            smooth_elastic(n, amplitude, wavelength, &mut rng)
        }
        FieldKind::SpikeNoise { count, magnitude } => {
            finite("spike magnitude", &[magnitude])?;
            if count > n * n {
                return Err(invalid(format!("{count} spikes do not fit in {n}x{n}")));
            }
            let mut ux = vec![0.0; n * n];
            let mut uy = vec![0.0; n * n];
            for i in rand::seq::index::sample(&mut rng, n * n, count) {
                let angle = rng.random_range(0.0..TAU);
                ux[i] = magnitude * angle.cos();
                uy[i] = magnitude * angle.sin();
            }
            DeformationField::new(n, n, ux, uy)
        }
        FieldKind::Checkerboard { amplitude } => {
            finite("amplitude", &[amplitude])?;
            DeformationField::from_fn(n, n, |x, y| {
                let v = if (x + y) % 2 == 0 {
                    amplitude
                } else {
                    -amplitude
                };
                (v, v)
            })
        }
    }
}

/// A slowly rotating global displacement whose length grows across the
/// grid, plus a Gaussian-windowed sinusoidal pattern at `wavelength`.
fn smooth_elastic(
    n: usize,
    amplitude: f64,
    wavelength: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DeformationField> {
    let nf = n as f64;
    let theta = rng.random_range(0.0..TAU);
    let phi = rng.random_range(0.0..TAU);
    let cx = rng.random_range(0.35..0.65) * nf;
    let cy = rng.random_range(0.35..0.65) * nf;
    let phases: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
    let (st, ct) = theta.sin_cos();

    // range of the perpendicular coordinate over the grid corners
    let last = nf - 1.0;
    let corners =
        [(0.0, 0.0), (last, 0.0), (0.0, last), (last, last)].map(|(x, y)| -x * st + y * ct);
    let t_min = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let k = TAU / wavelength;
    let sigma = nf / 4.0;
    DeformationField::from_fn(n, n, |x, y| {
        let (x, y) = (x as f64, y as f64);
        let s = (x * ct + y * st) / nf;
        let t = -x * st + y * ct;
        let psi = TAU * s + phi;
        let r = 0.5 + 0.5 * (t - t_min) / (t_max - t_min);
        let w = (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp();
        (
            amplitude * (r * psi.cos() + w * (k * x + phases[0]).sin() * (k * y + phases[1]).sin()),
            amplitude * (r * psi.sin() + w * (k * x + phases[2]).sin() * (k * y + phases[3]).sin()),
        )
    })
}

/// Two rectangle masks and their exact IoU.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub fixed: TissueMask,
    pub registered: TissueMask,
    pub iou: f64,
}

/// Rectangles of equal height spanning the middle rows, the second shifted
/// right so that the IoU lands within `1 / size` of `target`.
pub fn make_mask_pair(target: f64, size: usize) -> Result<MaskPair> {
    if !(0.0..=1.0).contains(&target) {
        return Err(invalid(format!("overlap target {target} outside [0, 1]")));
    }
    if size < 4 {
        return Err(invalid(format!("mask size {size} is below 4 px")));
    }
    let half = size / 2;
    let (shift, width) = if target == 0.0 {
        (half, half)
    } else {
        let s = ((size as f64 * (1.0 - target) / 2.0).round() as usize).min(half);
        (s, size - s)
    };
    let rows = size / 4..3 * size / 4;
    let rect = |x0: usize| {
        let mut bits = vec![0u8; size * size];
        for y in rows.clone() {
            bits[y * size + x0..y * size + x0 + width].fill(1);
        }
        TissueMask::from_bits(size, size, bits)
    };
    let fixed = rect(0)?;
    let registered = rect(shift)?;
    let inter = fixed
        .bits()
        .iter()
        .zip(registered.bits())
        .filter(|(a, b)| **a & **b == 1)
        .count();
    let union = fixed
        .bits()
        .iter()
        .zip(registered.bits())
        .filter(|(a, b)| **a | **b == 1)
        .count();
    Ok(MaskPair {
        fixed,
        registered,
        iou: inter as f64 / union as f64,
    })
}

/// RGB slide-like image: a few dark stained blobs on bright noisy glass.
pub fn make_tissue_image(width: usize, height: usize, seed: u64) -> Result<RasterImage> {
    if width == 0 || height == 0 {
        return Err(invalid("image must be at least 1x1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (width as f64, height as f64);
    let blobs: Vec<[f64; 5]> = (0..rng.random_range(2..5))
        .map(|_| {
            [
                rng.random_range(0.25..0.75) * wf,
                rng.random_range(0.25..0.75) * hf,
                rng.random_range(0.10..0.22) * wf,
                rng.random_range(0.10..0.22) * hf,
                rng.random_range(0.0..std::f64::consts::PI),
            ]
        })
        .collect();
    let mut pixels = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
            let inside = blobs.iter().any(|&[cx, cy, rx, ry, rot]| {
                let (s, c) = rot.sin_cos();
                let (dx, dy) = (xf - cx, yf - cy);
                let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
                (u / rx).powi(2) + (v / ry).powi(2) <= 1.0
            });
            let rgb: [u8; 3] = if inside {
                [
                    rng.random_range(120..170),
                    rng.random_range(60..110),
                    rng.random_range(130..180),
                ]
            } else {
                let base = rng.random_range(228..=245);
                [base, base - 3, base]
            };
            pixels.extend_from_slice(&rgb);
        }
    }
    RasterImage::new(width, height, 3, pixels)
}

/// Shifts an image by whole pixels, filling the exposed border with `fill`.
pub fn translate_image(image: &RasterImage, dx: isize, dy: isize, fill: u8) -> RasterImage {
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let src = image.pixels();
    let mut out = vec![fill; src.len()];
    for y in 0..h {
        let sy = y as isize - dy;
        if sy < 0 || sy >= h as isize {
            continue;
        }
        for x in 0..w {
            let sx = x as isize - dx;
            if sx < 0 || sx >= w as isize {
                continue;
            }
            let (d, s) = ((y * w + x) * c, (sy as usize * w + sx as usize) * c);
            out[d..d + c].copy_from_slice(&src[s..s + c]);
        }
    }
    RasterImage::new(w, h, c, out).expect("same geometry as the input")
}
