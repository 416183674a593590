//! Unified ordinal score and the serialisable quality report.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::deform::DeformMetrics;
use crate::error::{Result, UrqaError};
use crate::mask::MaskParams;
use crate::mask_metrics::MaskMetrics;

pub const SCHEMA_VERSION: u32 = 1;

/// 0 when either module fails, otherwise the better of the two scores.
pub fn unify(m_q: u8, d_q: u8) -> u8 {
    if m_q == 0 || d_q == 0 {
        0
    } else {
        m_q.max(d_q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Poor,
    Fair,
    Good,
    Excellent,
}

impl Grade {
    pub fn from_score(q: u8) -> Self {
        match q {
            0 => Grade::Poor,
            1 => Grade::Fair,
            2 => Grade::Good,
            _ => Grade::Excellent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Poor => "poor",
            Grade::Fair => "fair",
            Grade::Good => "good",
            Grade::Excellent => "excellent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_score(q: u8) -> Self {
        if q >= 1 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Where the numbers came from: inputs, evaluation geometry and the
/// mask-generation choices that shaped them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub pair_id: String,
    pub fixed_path: Option<PathBuf>,
    pub registered_path: Option<PathBuf>,
    pub field_path: Option<PathBuf>,
    pub fixed_source_dims: [usize; 2],
    pub registered_source_dims: [usize; 2],
    pub eval_dims: [usize; 2],
    pub registered_resized: bool,
    pub field_dims: [usize; 2],
    pub mask_params: MaskParams,
    pub morphology: String,
    pub min_component_size: usize,
    pub fixed_otsu_threshold: Option<u8>,
    pub registered_otsu_threshold: Option<u8>,
    pub fixed_mask_degenerate: bool,
    pub registered_mask_degenerate: bool,
    pub fixed_histogram_degenerate: bool,
    pub registered_histogram_degenerate: bool,
    pub histogram_region: String,
}

/// Per-stage wall-clock times in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: f64,
    pub preprocess: f64,
    pub masks: f64,
    pub mask_metrics: f64,
    pub deform_metrics: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema_version: u32,
    pub m_q: u8,
    pub d_q: u8,
    pub unified_score: u8,
    pub grade: Grade,
    pub verdict: Verdict,
    pub mask_metrics: MaskMetrics,
    pub deform_metrics: DeformMetrics,
    pub config: EvalConfig,
    pub provenance: Provenance,
    pub timings_ms: Timings,
}

/// Metrics tagged with the pair they were computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored<T> {
    pub pair_id: String,
    pub metrics: T,
}

impl<T> Scored<T> {
    pub fn new(pair_id: impl Into<String>, metrics: T) -> Self {
        Scored {
            pair_id: pair_id.into(),
            metrics,
        }
    }
}

pub fn assemble_report(
    mask: Scored<MaskMetrics>,
    deform: Scored<DeformMetrics>,
    config: EvalConfig,
    provenance: Provenance,
    timings: Timings,
) -> Result<QualityReport> {
    for other in [&deform.pair_id, &provenance.pair_id] {
        if *other != mask.pair_id {
            return Err(UrqaError::InconsistentInputs(format!(
                "metrics for pair {:?} combined with pair {:?}",
                mask.pair_id, other
            )));
        }
    }
    let (m_q, d_q) = (mask.metrics.m_q, deform.metrics.d_q);
    let q = unify(m_q, d_q);
    Ok(QualityReport {
        schema_version: SCHEMA_VERSION,
        m_q,
        d_q,
        unified_score: q,
        grade: Grade::from_score(q),
        verdict: Verdict::from_score(q),
        mask_metrics: mask.metrics,
        deform_metrics: deform.metrics,
        config,
        provenance,
        timings_ms: timings,
    })
}

pub fn write_report(report: &QualityReport, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<QualityReport> {
    if !path.exists() {
        return Err(UrqaError::FileNotFound(path.to_path_buf()));
    }
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
