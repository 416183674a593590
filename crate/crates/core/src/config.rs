//! Evaluation parameters shared by every stage.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrqaError};

/// Which intensity class of the grayscale image is tissue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TissuePolarity {
    /// Stained tissue on a bright glass background (H&E, IHC).
    #[default]
    Dark,
    /// Bright tissue on a dark background (fluorescence and similar).
    Bright,
}

/// Parameters of the evaluation. Every field has a default, so a config file
/// only needs to list what it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Longer side of the evaluation raster, in pixels.
    pub max_eval_size: usize,
    pub histogram_bins: usize,
    /// Standard deviation of the smoothing kernel used for the residual, in pixels.
    pub gaussian_sigma: f64,
    /// Allowed |mean(J) - 1|.
    pub jacobian_mean_tol: f64,
    /// Upper bound (exclusive) on std(J).
    pub jacobian_std_max: f64,
    /// Upper bound (exclusive) on the fraction of pixels with J < 0.
    pub folding_max_fraction: f64,
    /// Slack added to the IQR side of every `value < IQR` criterion.
    pub epsilon: f64,
    pub tissue_polarity: TissuePolarity,
    /// Components smaller than this fraction of the raster are discarded.
    pub min_component_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_eval_size: 512,
            histogram_bins: 256,
            gaussian_sigma: 2.0,
            jacobian_mean_tol: 0.10,
            jacobian_std_max: 0.25,
            folding_max_fraction: 0.015,
            epsilon: 1e-6,
            tissue_polarity: TissuePolarity::Dark,
            min_component_fraction: 0.0005,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(UrqaError::InvalidConfig(msg.to_string()));
        if self.max_eval_size < 32 {
            return bad("max_eval_size must be at least 32");
        }
        if self.histogram_bins < 2 {
            return bad("histogram_bins must be at least 2");
        }
        let positive = [
            ("gaussian_sigma", self.gaussian_sigma),
            ("jacobian_mean_tol", self.jacobian_mean_tol),
            ("jacobian_std_max", self.jacobian_std_max),
            ("folding_max_fraction", self.folding_max_fraction),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(UrqaError::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if !(self.min_component_fraction.is_finite()
            && (0.0..1.0).contains(&self.min_component_fraction))
        {
            return bad("min_component_fraction must lie in [0, 1)");
        }
        Ok(())
    }

    /// Reads a JSON config file and validates it.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(UrqaError::FileNotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let cfg: EvalConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
