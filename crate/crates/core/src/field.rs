//! Dense 2-D displacement fields.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Result, UrqaError};
use crate::npy::{read_npy, write_npy_f64};

/// Per-pixel displacement `(ux, uy)` in pixels at field resolution, row-major.
/// Every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    width: usize,
    height: usize,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl DeformationField {
    pub fn new(width: usize, height: usize, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(UrqaError::EmptyInput);
        }
        let n = width * height;
        if ux.len() != n {
            return Err(UrqaError::LengthMismatch(n, ux.len()));
        }
        if uy.len() != n {
            return Err(UrqaError::LengthMismatch(n, uy.len()));
        }
        if let Some(i) = ux.iter().position(|v| !v.is_finite()) {
            return Err(UrqaError::NonFiniteField { index: i });
        }
        if let Some(i) = uy.iter().position(|v| !v.is_finite()) {
            return Err(UrqaError::NonFiniteField { index: n + i });
        }
        Ok(DeformationField {
            width,
            height,
            ux,
            uy,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![0.0; width * height],
            vec![0.0; width * height],
        )
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel centre index.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Result<Self> {
        let mut ux = Vec::with_capacity(width * height);
        let mut uy = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                ux.push(a);
                uy.push(b);
            }
        }
        Self::new(width, height, ux, uy)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ux(&self) -> &[f64] {
        &self.ux
    }

    pub fn uy(&self) -> &[f64] {
        &self.uy
    }

    /// Same field with `(dx, dy)` added to every vector.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.ux.iter().map(|v| v + dx).collect(),
            self.uy.iter().map(|v| v + dy).collect(),
        )
    }

    /// Same field with every vector rotated by `angle` radians.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        let ux = self
            .ux
            .iter()
            .zip(&self.uy)
            .map(|(x, y)| c * x - s * y)
            .collect();
        let uy = self
            .ux
            .iter()
            .zip(&self.uy)
            .map(|(x, y)| s * x + c * y)
            .collect();
        Self::new(self.width, self.height, ux, uy)
    }

    /// Writes the field as an `(H, W, 2)` little-endian `f8` npy file.
    pub fn save_npy(&self, path: &Path) -> Result<()> {
        let mut interleaved = Vec::with_capacity(self.len() * 2);
        for (x, y) in self.ux.iter().zip(&self.uy) {
            interleaved.push(*x);
            interleaved.push(*y);
        }
        let mut out = BufWriter::new(File::create(path)?);
        write_npy_f64(&mut out, &[self.height, self.width, 2], &interleaved)?;
        Ok(())
    }
}

/// Loads an npy displacement field stored as `(H, W, 2)` or `(2, H, W)`.
///
/// A shape of `(2, N, 2)` fits both layouts; it is read as `(H, W, 2)`.
pub fn load_deformation_field(path: &Path) -> Result<DeformationField> {
    if !path.exists() {
        return Err(UrqaError::FileNotFound(path.to_path_buf()));
    }
    let mut reader = BufReader::new(File::open(path)?);
    let arr = read_npy(&mut reader).map_err(|e| match e {
        UrqaError::UnsupportedFormat { reason, .. } => UrqaError::unsupported(Some(path), reason),
        other => other,
    })?;

    let (width, height, ux, uy) = match arr.shape.as_slice() {
        &[h, w, 2] => {
            let ux = arr.data.iter().step_by(2).copied().collect();
            let uy = arr.data.iter().skip(1).step_by(2).copied().collect();
            (w, h, ux, uy)
        }
        &[2, h, w] => {
            let mut data = arr.data;
            let uy = data.split_off(h * w);
            (w, h, data, uy)
        }
        other => {
            return Err(UrqaError::unsupported(
                Some(path),
                format!("field shape {other:?} is neither (H, W, 2) nor (2, H, W)"),
            ))
        }
    };
    if width == 0 || height == 0 {
        return Err(UrqaError::unsupported(
            Some(path),
            "field has an empty axis",
        ));
    }
    DeformationField::new(width, height, ux, uy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npy::write_npy_f32;
    use proptest::prelude::*;

    fn write_raw(dir: &Path, name: &str, shape: &[usize], data: &[f64]) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        write_npy_f64(&mut f, shape, data).unwrap();
        path
    }

    #[test]
    fn zeros_hwc() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_raw(dir.path(), "z.npy", &[4, 4, 2], &[0.0; 32]);
        let f = load_deformation_field(&p).unwrap();
        assert_eq!((f.width(), f.height()), (4, 4));
        assert!(f.ux().iter().chain(f.uy()).all(|&v| v == 0.0));
    }

    #[test]
    fn ones_chw() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_raw(dir.path(), "o.npy", &[2, 3, 3], &[1.0; 18]);
        let f = load_deformation_field(&p).unwrap();
        assert_eq!((f.width(), f.height()), (3, 3));
        assert!(f.ux().iter().chain(f.uy()).all(|&v| v == 1.0));
    }

    #[test]
    fn nan_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = vec![0.0; 32];
        data[13] = f64::NAN;
        let p = write_raw(dir.path(), "n.npy", &[4, 4, 2], &data);
        assert!(matches!(
            load_deformation_field(&p),
            Err(UrqaError::NonFiniteField { .. })
        ));
        let mut data = vec![0.0; 32];
        data[0] = f64::INFINITY;
        let p = write_raw(dir.path(), "i.npy", &[4, 4, 2], &data);
        assert!(matches!(
            load_deformation_field(&p),
            Err(UrqaError::NonFiniteField { .. })
        ));
    }

    #[test]
    fn f4_fields_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f4.npy");
        let mut f = File::create(&path).unwrap();
        write_npy_f32(
            &mut f,
            &[2, 2, 2],
            &[0.5, -0.5, 1.0, 2.0, 0.0, 0.0, 3.0, 4.0],
        )
        .unwrap();
        drop(f);
        let field = load_deformation_field(&path).unwrap();
        assert_eq!(field.ux(), &[0.5, 1.0, 0.0, 3.0]);
        assert_eq!(field.uy(), &[-0.5, 2.0, 0.0, 4.0]);
    }

    #[test]
    fn bad_shapes_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_raw(dir.path(), "s.npy", &[4, 4, 3], &[0.0; 48]);
        assert!(matches!(
            load_deformation_field(&p),
            Err(UrqaError::UnsupportedFormat { .. })
        ));
        assert!(matches!(
            load_deformation_field(&dir.path().join("missing.npy")),
            Err(UrqaError::FileNotFound(_))
        ));
    }

    #[test]
    fn save_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let field = DeformationField::from_fn(5, 3, |x, y| (x as f64 * 0.25, -(y as f64))).unwrap();
        let p = dir.path().join("f.npy");
        field.save_npy(&p).unwrap();
        assert_eq!(load_deformation_field(&p).unwrap(), field);
    }

    proptest! {
        #[test]
        fn both_layouts_agree(w in 1usize..7, h in 1usize..7, seed in any::<u32>()) {
            prop_assume!(w != 2); // (2, H, 2) is read as (H, W, 2)
            let n = w * h;
            let ux: Vec<f64> = (0..n).map(|i| ((i as u32).wrapping_mul(seed) % 97) as f64 / 7.0).collect();
            let uy: Vec<f64> = (0..n).map(|i| -(((i as u32 ^ seed) % 89) as f64) / 3.0).collect();
            let hwc: Vec<f64> = ux.iter().zip(&uy).flat_map(|(a, b)| [*a, *b]).collect();
            let chw: Vec<f64> = ux.iter().chain(&uy).copied().collect();
            let dir = tempfile::tempdir().unwrap();
            let a = load_deformation_field(&write_raw(dir.path(), "a.npy", &[h, w, 2], &hwc)).unwrap();
            let b = load_deformation_field(&write_raw(dir.path(), "b.npy", &[2, h, w], &chw)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
