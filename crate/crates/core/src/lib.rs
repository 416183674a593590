//! Ground-truth-free quality assessment for image registration.
//!
//! Two independent checks are scored and fused into one ordinal grade:
//! tissue-mask agreement between the fixed and registered images
//! ([`mask_metrics`]) and plausibility of the deformation field
//! ([`deform`]). [`fusion`] combines them into a [`QualityReport`].

pub mod config;
pub mod deform;
pub mod error;
pub mod field;
pub mod fusion;
pub mod mask;
pub mod mask_metrics;
pub mod npy;
pub mod raster;
pub mod stats;
pub mod synth;
pub mod viz;

pub use config::{EvalConfig, TissuePolarity};
pub use deform::{evaluate_field, DeformCriteria, DeformEvaluation, DeformMetrics};
pub use error::{Result, UrqaError};
pub use field::{load_deformation_field, DeformationField};
pub use fusion::{
    assemble_report, read_report, unify, write_report, Grade, Provenance, QualityReport, Scored,
    Timings, Verdict,
};
pub use mask::{generate_mask, otsu_threshold, MaskParams, TissueMask};
pub use mask_metrics::{evaluate_masks, MaskEvaluation, MaskMetrics};
pub use raster::{downsample_to_eval, load_image, to_grayscale, RasterImage};
