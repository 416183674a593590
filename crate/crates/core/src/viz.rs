//! Diagnostic PNGs: masks, mask overlap and per-pixel deformation maps.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::deform::{DeformMaps, Grid};
use crate::error::{Result, UrqaError};
use crate::mask::TissueMask;
use crate::raster::RasterImage;

fn encode(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(out, width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let result = encoder
        .write_header()
        .and_then(|mut w| w.write_image_data(data).and_then(|_| w.finish()));
    result.map_err(|e| match e {
        png::EncodingError::IoError(io) => UrqaError::Io(io),
        other => UrqaError::InvalidRaster(other.to_string()),
    })
}

/// 1-bit grayscale PNG, tissue white.
pub fn save_mask_png(mask: &TissueMask, path: &Path) -> Result<()> {
    let (w, h) = mask.dims();
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * h];
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &b)| b == 1) {
        let (x, y) = (i % w, i / w);
        packed[y * stride + x / 8] |= 0x80 >> (x % 8);
    }
    encode(
        path,
        w,
        h,
        png::ColorType::Grayscale,
        png::BitDepth::One,
        &packed,
    )
}

/// Fixed mask in red, registered mask in green; agreement shows yellow.
pub fn save_overlap_png(fixed: &TissueMask, registered: &TissueMask, path: &Path) -> Result<()> {
    if fixed.dims() != registered.dims() {
        return Err(UrqaError::dims(fixed.dims(), registered.dims()));
    }
    let (w, h) = fixed.dims();
    let data: Vec<u8> = fixed
        .bits()
        .iter()
        .zip(registered.bits())
        .flat_map(|(&f, &r)| [f * 255, r * 255, 0])
        .collect();
    encode(path, w, h, png::ColorType::Rgb, png::BitDepth::Eight, &data)
}

pub fn save_raster_png(image: &RasterImage, path: &Path) -> Result<()> {
    let color = if image.is_grayscale() {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    };
    encode(
        path,
        image.width(),
        image.height(),
        color,
        png::BitDepth::Eight,
        image.pixels(),
    )
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Black, red, yellow, white ramp over `t` in `[0, 1]`.
pub fn heat(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * 3.0;
    [to_u8(t), to_u8(t - 1.0), to_u8(t - 2.0)]
}

pub fn hue(h: f64) -> [u8; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let f = h - h.floor();
    let (r, g, b) = match h as u32 {
        0 => (1.0, f, 0.0),
        1 => (1.0 - f, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, 1.0 - f, 1.0),
        4 => (f, 0.0, 1.0),
        _ => (1.0, 0.0, 1.0 - f),
    };
    [to_u8(r), to_u8(g), to_u8(b)]
}

fn save_rgb(grid: &Grid, path: &Path, color: impl Fn(f64) -> [u8; 3]) -> Result<()> {
    let data: Vec<u8> = grid.values.iter().flat_map(|&v| color(v)).collect();
    encode(
        path,
        grid.width,
        grid.height,
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        &data,
    )
}

fn max_of(grid: &Grid) -> f64 {
    grid.values.iter().copied().fold(0.0, f64::max)
}

/// Heatmap scaled to the grid maximum.
pub fn save_heatmap_png(grid: &Grid, path: &Path) -> Result<()> {
    let max = max_of(grid);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    save_rgb(grid, path, |v| heat(v * scale))
}

/// Angle mapped to hue; pixels without displacement are grey.
pub fn save_direction_png(direction: &Grid, magnitude: &Grid, path: &Path) -> Result<()> {
    let data: Vec<u8> = direction
        .values
        .iter()
        .zip(&magnitude.values)
        .flat_map(|(&a, &m)| {
            if m == 0.0 {
                [128; 3]
            } else {
                hue((a + std::f64::consts::PI) / std::f64::consts::TAU)
            }
        })
        .collect();
    encode(
        path,
        direction.width,
        direction.height,
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        &data,
    )
}

/// Blue below 1, white at 1, red above; folded (negative) pixels green.
pub fn save_jacobian_png(jacobian: &Grid, path: &Path) -> Result<()> {
    let spread = jacobian
        .values
        .iter()
        .filter(|&&j| j >= 0.0)
        .map(|j| (j - 1.0).abs())
        .fold(0.0, f64::max);
    let scale = if spread > 0.0 { 1.0 / spread } else { 0.0 };
    save_rgb(jacobian, path, |j| {
        if j < 0.0 {
            return [0, 255, 0];
        }
        let d = ((j - 1.0) * scale).clamp(-1.0, 1.0);
        if d >= 0.0 {
            [255, to_u8(1.0 - d), to_u8(1.0 - d)]
        } else {
            [to_u8(1.0 + d), to_u8(1.0 + d), 255]
        }
    })
}

/// Writes the four deformation panels into `dir`.
pub fn save_deform_maps(maps: &DeformMaps, dir: &Path) -> Result<()> {
    save_heatmap_png(&maps.magnitude, &dir.join("magnitude.png"))?;
    save_direction_png(&maps.direction, &maps.magnitude, &dir.join("direction.png"))?;
    save_jacobian_png(&maps.jacobian, &dir.join("jacobian.png"))?;
    save_heatmap_png(&maps.residual, &dir.join("residual.png"))
}
