//! Summary statistics over value grids.

use crate::error::{Result, UrqaError};

/// Lower and upper percentile (as fractions) spanned by [`iqr`].
pub const IQR_LOWER: f64 = 0.30;
pub const IQR_UPPER: f64 = 0.80;

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(UrqaError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean and population standard deviation (two-pass).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok((m, var.sqrt()))
}

/// Linearly interpolated quantile at `p` in `[0, 1]`: rank `p * (n - 1)`
/// between the neighbouring order statistics. Reorders `buf`.
pub fn quantile_in_place(buf: &mut [f64], p: f64) -> Result<f64> {
    if buf.is_empty() {
        return Err(UrqaError::EmptyInput);
    }
    assert!((0.0..=1.0).contains(&p), "quantile {p} outside [0, 1]");
    let rank = p * (buf.len() - 1) as f64;
    let k = rank.floor() as usize;
    let frac = rank - k as f64;
    let (_, lo, upper) = buf.select_nth_unstable_by(k, f64::total_cmp);
    let lo = *lo;
    if frac == 0.0 || upper.is_empty() {
        return Ok(lo);
    }
    let hi = upper.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(lo + (hi - lo) * frac)
}

pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    quantile_in_place(&mut values.to_vec(), p)
}

/// The 80th minus the 30th percentile.
pub fn iqr(values: &[f64]) -> Result<f64> {
    let mut buf = values.to_vec();
    let upper = quantile_in_place(&mut buf, IQR_UPPER)?;
    let lower = quantile_in_place(&mut buf, IQR_LOWER)?;
    Ok(upper - lower)
}

/// Mean, population std and IQR of one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
    pub iqr: f64,
}

pub fn spread(values: &[f64]) -> Result<Spread> {
    let (mean, std) = mean_std(values)?;
    Ok(Spread {
        mean,
        std,
        iqr: iqr(values)?,
    })
}
