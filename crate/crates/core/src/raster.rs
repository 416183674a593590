//! 8-bit raster loading, area resampling and grayscale conversion.

use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Result, UrqaError};

/// A decoded 8-bit grayscale or RGB pixel grid, row-major and interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
    source_level: Option<u32>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(UrqaError::InvalidRaster(format!(
                "raster must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(UrqaError::InvalidRaster(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(UrqaError::InvalidRaster(format!(
                "pixel buffer holds {} bytes, expected {}",
                pixels.len(),
                width * height * channels
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            pixels,
            source_level: None,
        })
    }

    /// Single-channel raster filled with `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, 1, vec![value; width * height])
    }

    pub fn with_source_level(mut self, level: Option<u32>) -> Self {
        self.source_level = level;
        self
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

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn source_level(&self) -> Option<u32> {
        self.source_level
    }

    pub fn is_grayscale(&self) -> bool {
        self.channels == 1
    }
}

/// Loads a PNG or TIFF raster. Alpha channels are dropped; anything other
/// than 8 bits per channel is rejected.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    if !path.exists() {
        return Err(UrqaError::FileNotFound(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)?
        .with_guessed_format()
        .map_err(|e| UrqaError::unsupported(Some(path), e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Tiff) => {}
        Some(other) => {
            return Err(UrqaError::unsupported(
                Some(path),
                format!("{other:?} is not accepted; use PNG or TIFF"),
            ))
        }
        None => {
            return Err(UrqaError::unsupported(
                Some(path),
                "unrecognised image container",
            ))
        }
    }
    let decoded = reader
        .decode()
        .map_err(|e| UrqaError::unsupported(Some(path), e.to_string()))?;

    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, pixels) = match decoded {
        DynamicImage::ImageLuma8(buf) => (1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => (3, buf.into_raw()),
        DynamicImage::ImageLumaA8(buf) => {
            (1, buf.into_raw().chunks_exact(2).map(|p| p[0]).collect())
        }
        DynamicImage::ImageRgba8(buf) => (
            3,
            buf.into_raw()
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect(),
        ),
        other => {
            return Err(UrqaError::unsupported(
                Some(path),
                format!("only 8-bit images are supported, got {:?}", other.color()),
            ))
        }
    };
    RasterImage::new(width, height, channels, pixels)
        .map_err(|e| UrqaError::unsupported(Some(path), e.to_string()))
}

/// Output size for a longest side of at most `max_side`, aspect preserved.
pub fn eval_dims(width: usize, height: usize, max_side: usize) -> (usize, usize) {
    let longest = width.max(height);
    if longest <= max_side {
        return (width, height);
    }
    // round(side * max_side / longest), half away from zero
    let scale = |side: usize| ((2 * side * max_side + longest) / (2 * longest)).max(1);
    (scale(width), scale(height))
}

/// Shrinks `image` so that its longer side equals `max_eval_size`. Rasters
/// that already fit are returned unchanged.
pub fn downsample_to_eval(image: &RasterImage, max_eval_size: usize) -> RasterImage {
    let (w, h) = eval_dims(image.width, image.height, max_eval_size);
    if (w, h) == image.dims() {
        return image.clone();
    }
    resize_area(image, w, h)
}

/// Per-axis area weights: for each output index, the source indices it
/// covers and the covered length in units of 1/`dst`.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, u64)>> {
    // output i spans [i*src, (i+1)*src) and source j spans [j*dst, (j+1)*dst),
    // both in units of 1/dst source pixels
    (0..dst)
        .map(|i| {
            let lo = (i * src) as u64;
            let hi = ((i + 1) * src) as u64;
            let first = (lo / dst as u64) as usize;
            let last = (((hi - 1) / dst as u64) as usize).min(src - 1);
            (first..=last)
                .filter_map(|j| {
                    let s_lo = (j * dst) as u64;
                    let s_hi = ((j + 1) * dst) as u64;
                    let overlap = hi.min(s_hi).saturating_sub(lo.max(s_lo));
                    (overlap > 0).then_some((j, overlap))
                })
                .collect()
        })
        .collect()
}

/// Box (area-averaging) resampling to an arbitrary size. Works for both
/// shrinking and small enlargements.
pub fn resize_area(image: &RasterImage, new_width: usize, new_height: usize) -> RasterImage {
    assert!(
        new_width > 0 && new_height > 0,
        "target size must be non-zero"
    );
    if (new_width, new_height) == image.dims() {
        return image.clone();
    }
    let c = image.channels;
    let wx = area_weights(image.width, new_width);
    let wy = area_weights(image.height, new_height);
    let norm_x = image.width as f64;
    let norm_y = image.height as f64;

    let mut horizontal = vec![0.0f64; image.height * new_width * c];
    for y in 0..image.height {
        let row = &image.pixels[y * image.width * c..(y + 1) * image.width * c];
        let out = &mut horizontal[y * new_width * c..(y + 1) * new_width * c];
        for (x, weights) in wx.iter().enumerate() {
            for ch in 0..c {
                let acc: u64 = weights
                    .iter()
                    .map(|&(j, w)| row[j * c + ch] as u64 * w)
                    .sum();
                out[x * c + ch] = acc as f64 / norm_x;
            }
        }
    }

    let mut pixels = vec![0u8; new_width * new_height * c];
    let stride = new_width * c;
    for (y, weights) in wy.iter().enumerate() {
        let out = &mut pixels[y * stride..(y + 1) * stride];
        for (i, px) in out.iter_mut().enumerate() {
            let acc: f64 = weights
                .iter()
                .map(|&(j, w)| horizontal[j * stride + i] * w as f64)
                .sum();
            *px = (acc / norm_y).round().clamp(0.0, 255.0) as u8;
        }
    }

    RasterImage {
        width: new_width,
        height: new_height,
        channels: c,
        pixels,
        source_level: image.source_level,
    }
}

/// BT.601 luma, rounded to the nearest level. Grayscale input is returned as is.
pub fn to_grayscale(image: &RasterImage) -> RasterImage {
    if image.channels == 1 {
        return image.clone();
    }
    let pixels = image
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let weighted = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
            ((weighted + 500) / 1000) as u8
        })
        .collect();
    RasterImage {
        width: image.width,
        height: image.height,
        channels: 1,
        pixels,
        source_level: image.source_level,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb(width: usize, height: usize, fill: [u8; 3]) -> RasterImage {
        let pixels = (0..width * height).flat_map(|_| fill).collect();
        RasterImage::new(width, height, 3, pixels).unwrap()
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(RasterImage::new(0, 4, 1, vec![]).is_err());
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 5]).is_err());
    }

    #[test]
    fn eval_dims_examples() {
        assert_eq!(eval_dims(512, 512, 512), (512, 512));
        assert_eq!(eval_dims(4096, 2048, 512), (512, 256));
        assert_eq!(eval_dims(1000, 600, 512), (512, 307));
        assert_eq!(eval_dims(5000, 3, 512), (512, 1));
    }

    #[test]
    fn eval_dims_match_float_rounding() {
        for (w, h) in [
            (1000, 600),
            (777, 1333),
            (2049, 513),
            (640, 641),
            (9999, 17),
        ] {
            let longest = w.max(h) as f64;
            let expect = |s: usize| ((s as f64 * 512.0 / longest).round() as usize).max(1);
            assert_eq!(eval_dims(w, h, 512), (expect(w), expect(h)), "{w}x{h}");
        }
    }

    #[test]
    fn downsample_is_noop_when_small() {
        let img = rgb(512, 512, [10, 20, 30]);
        assert_eq!(downsample_to_eval(&img, 512), img);
    }

    #[test]
    fn downsample_shapes() {
        let img = RasterImage::filled(4096, 2048, 9).unwrap();
        let out = downsample_to_eval(&img, 512);
        assert_eq!(out.dims(), (512, 256));
        assert!(out.pixels().iter().all(|&v| v == 9));

        let img = RasterImage::filled(1000, 600, 200).unwrap();
        let out = downsample_to_eval(&img, 512);
        assert_eq!(out.dims(), (512, 307));
        assert!(out.pixels().iter().all(|&v| v == 200));
    }

    #[test]
    fn box_average_of_2x2_blocks() {
        let img = RasterImage::new(4, 2, 1, vec![0, 10, 20, 40, 30, 40, 60, 80]).unwrap();
        let out = resize_area(&img, 2, 1);
        assert_eq!(out.pixels(), &[20, 50]);
    }

    #[test]
    fn fractional_area_weights() {
        // 3 -> 2: output 0 covers src 0 fully and half of src 1
        let img = RasterImage::new(3, 1, 1, vec![0, 90, 180]).unwrap();
        let out = resize_area(&img, 2, 1);
        assert_eq!(out.pixels(), &[30, 150]);
    }

    #[test]
    fn grayscale_examples() {
        let white = rgb(1, 1, [255, 255, 255]);
        assert_eq!(to_grayscale(&white).pixels(), &[255]);
        let red = rgb(1, 1, [255, 0, 0]);
        assert_eq!(
            to_grayscale(&red).pixels(),
            &[(0.299f64 * 255.0).round() as u8]
        );
        assert_eq!(to_grayscale(&red).pixels(), &[76]);
        let gray = RasterImage::new(2, 1, 1, vec![3, 250]).unwrap();
        assert_eq!(to_grayscale(&gray), gray);
    }

    #[test]
    fn load_missing_file() {
        let err = load_image(Path::new("/definitely/not/here.png")).unwrap_err();
        assert!(matches!(err, UrqaError::FileNotFound(_)));
    }

    proptest! {
        #[test]
        fn downsample_is_idempotent(w in 1usize..300, h in 1usize..300, seed in any::<u8>()) {
            let pixels = (0..w * h).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
            let img = RasterImage::new(w, h, 1, pixels).unwrap();
            let once = downsample_to_eval(&img, 64);
            prop_assert_eq!(once.width().max(once.height()), w.max(h).min(64));
            let twice = downsample_to_eval(&once, 64);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn grayscale_is_idempotent(px in proptest::collection::vec(any::<u8>(), 3..=300)) {
            let n = px.len() / 3;
            let img = RasterImage::new(n, 1, 3, px[..n * 3].to_vec()).unwrap();
            let g = to_grayscale(&img);
            prop_assert_eq!(to_grayscale(&g), g);
        }
    }
}
