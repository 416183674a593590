//! Single-pair and batch evaluation on top of `urqa-core`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use urqa_core::deform::DeformMaps;
use urqa_core::mask::MaskParams;
use urqa_core::raster::{eval_dims, resize_area};
use urqa_core::{
    assemble_report, downsample_to_eval, evaluate_field, evaluate_masks, generate_mask,
    load_deformation_field, load_image, to_grayscale, viz, write_report, EvalConfig, Grade,
    Provenance, QualityReport, Scored, Timings, TissueMask, UrqaError, Verdict,
};

/// Registered images whose evaluation size differs from the fixed image's by
/// at most this many pixels per axis are resized to match.
pub const RESIZE_TOLERANCE: usize = 2;

pub const MANIFEST_HEADER: [&str; 4] = ["pair_id", "fixed", "registered", "field"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("pair {pair_id}: {source}")]
    Pair {
        pair_id: String,
        #[source]
        source: UrqaError,
    },
    #[error(transparent)]
    Core(#[from] UrqaError),
    #[error("manifest {}: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit statuses.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairInputs {
    pub pair_id: String,
    pub fixed: PathBuf,
    pub registered: PathBuf,
    pub field: PathBuf,
}

/// Where to write the optional diagnostic images.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub masks: Option<PathBuf>,
    pub deform: Option<PathBuf>,
    pub overlap: Option<PathBuf>,
}

/// Report plus the intermediate rasters needed for diagnostics.
pub struct Evaluation {
    pub report: QualityReport,
    pub fixed_mask: TissueMask,
    pub registered_mask: TissueMask,
    pub deform_maps: DeformMaps,
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs the full pipeline on one pair without touching the output tree.
pub fn evaluate_pair(
    inputs: &PairInputs,
    cfg: &EvalConfig,
) -> std::result::Result<Evaluation, UrqaError> {
    cfg.validate()?;
    let total = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let fixed_src = load_image(&inputs.fixed)?;
    let registered_src = load_image(&inputs.registered)?;
    let field = load_deformation_field(&inputs.field)?;
    timings.load = ms_since(t);

    let t = Instant::now();
    let fixed_eval = downsample_to_eval(&fixed_src, cfg.max_eval_size);
    let target = fixed_eval.dims();
    let reg_dims = eval_dims(
        registered_src.width(),
        registered_src.height(),
        cfg.max_eval_size,
    );
    if reg_dims.0.abs_diff(target.0) > RESIZE_TOLERANCE
        || reg_dims.1.abs_diff(target.1) > RESIZE_TOLERANCE
    {
        return Err(UrqaError::DimensionMismatch {
            left_width: target.0,
            left_height: target.1,
            right_width: reg_dims.0,
            right_height: reg_dims.1,
        });
    }
    let registered_resized = reg_dims != target;
    let registered_eval = resize_area(&registered_src, target.0, target.1);
    let fixed_gray = to_grayscale(&fixed_eval);
    let registered_gray = to_grayscale(&registered_eval);
    timings.preprocess = ms_since(t);

    let t = Instant::now();
    let params = MaskParams::from(cfg);
    let fixed_mask = generate_mask(&fixed_gray, &params)?;
    let registered_mask = generate_mask(&registered_gray, &params)?;
    timings.masks = ms_since(t);

    let t = Instant::now();
    let masks = evaluate_masks(
        &fixed_gray,
        &registered_gray,
        &fixed_mask,
        &registered_mask,
        cfg.histogram_bins,
    )?;
    timings.mask_metrics = ms_since(t);

    let t = Instant::now();
    let deform = evaluate_field(&field, cfg)?;
    timings.deform_metrics = ms_since(t);

    let provenance = Provenance {
        pair_id: inputs.pair_id.clone(),
        fixed_path: Some(inputs.fixed.clone()),
        registered_path: Some(inputs.registered.clone()),
        field_path: Some(inputs.field.clone()),
        fixed_source_dims: [fixed_src.width(), fixed_src.height()],
        registered_source_dims: [registered_src.width(), registered_src.height()],
        eval_dims: [target.0, target.1],
        registered_resized,
        field_dims: [field.width(), field.height()],
        mask_params: params,
        morphology: "close3x3,open3x3".into(),
        min_component_size: params.min_component_size(target.0, target.1),
        fixed_otsu_threshold: fixed_mask.otsu_threshold(),
        registered_otsu_threshold: registered_mask.otsu_threshold(),
        fixed_mask_degenerate: fixed_mask.is_degenerate(),
        registered_mask_degenerate: registered_mask.is_degenerate(),
        fixed_histogram_degenerate: masks.fixed_histogram_degenerate,
        registered_histogram_degenerate: masks.registered_histogram_degenerate,
        histogram_region: "tissue_mask".into(),
    };
    timings.total = ms_since(total);

    let report = assemble_report(
        Scored::new(&inputs.pair_id, masks.metrics),
        Scored::new(&inputs.pair_id, deform.metrics),
        cfg.clone(),
        provenance,
        timings,
    )?;
    Ok(Evaluation {
        report,
        fixed_mask,
        registered_mask,
        deform_maps: deform.maps,
    })
}

fn write_diagnostics(
    eval: &Evaluation,
    pair_id: &str,
    diag: &Diagnostics,
) -> std::result::Result<(), UrqaError> {
    if let Some(dir) = &diag.masks {
        fs::create_dir_all(dir)?;
        viz::save_mask_png(
            &eval.fixed_mask,
            &dir.join(format!("{pair_id}_fixed_mask.png")),
        )?;
        viz::save_mask_png(
            &eval.registered_mask,
            &dir.join(format!("{pair_id}_registered_mask.png")),
        )?;
    }
    if let Some(dir) = &diag.overlap {
        fs::create_dir_all(dir)?;
        viz::save_overlap_png(
            &eval.fixed_mask,
            &eval.registered_mask,
            &dir.join(format!("{pair_id}_overlap.png")),
        )?;
    }
    if let Some(dir) = &diag.deform {
        let dir = dir.join(format!("{pair_id}_deform"));
        fs::create_dir_all(&dir)?;
        viz::save_deform_maps(&eval.deform_maps, &dir)?;
    }
    Ok(())
}

/// Evaluates one pair, writing `<out>/<pair_id>.json` and any requested
/// diagnostics.
pub fn run_single(
    inputs: &PairInputs,
    cfg: &EvalConfig,
    out_dir: Option<&Path>,
    diag: &Diagnostics,
) -> Result<QualityReport> {
    let with_pair = |source| CliError::Pair {
        pair_id: inputs.pair_id.clone(),
        source,
    };
    let eval = evaluate_pair(inputs, cfg).map_err(with_pair)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| with_pair(e.into()))?;
        write_report(&eval.report, &dir.join(format!("{}.json", inputs.pair_id)))
            .map_err(with_pair)?;
    }
    write_diagnostics(&eval, &inputs.pair_id, diag).map_err(with_pair)?;
    Ok(eval.report)
}

pub fn exit_code(report: &QualityReport) -> i32 {
    match report.verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<PairInputs>,
}

/// Pair ids become file names, so they are limited to a portable set.
fn valid_pair_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl Manifest {
    /// Parses a manifest CSV. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path, source: &Path) -> Result<Self> {
        let err = |reason: String| CliError::Manifest {
            path: source.to_path_buf(),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| err(e.to_string()))?.clone();
        if header.iter().ne(MANIFEST_HEADER) {
            return Err(err(format!(
                "header must be `{}`, got `{}`",
                MANIFEST_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|e| err(format!("line {line}: {e}")))?;
            let pair_id = &record[0];
            if !valid_pair_id(pair_id) {
                return Err(err(format!("line {line}: invalid pair_id {pair_id:?}")));
            }
            if !seen.insert(pair_id.to_string()) {
                return Err(err(format!("line {line}: duplicate pair_id {pair_id:?}")));
            }
            let path = |i: usize| {
                if record[i].is_empty() {
                    Err(err(format!(
                        "line {line}: empty {} path",
                        MANIFEST_HEADER[i]
                    )))
                } else {
                    Ok(base.join(&record[i]))
                }
            };
            entries.push(PairInputs {
                pair_id: pair_id.to_string(),
                fixed: path(1)?,
                registered: path(2)?,
                field: path(3)?,
            });
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair_id: String,
    pub unified_score: u8,
    pub grade: Grade,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub pair_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    pub evaluated: usize,
    pub errors: usize,
    pub passed: usize,
    pub failed: usize,
    pub grade_counts: BTreeMap<String, usize>,
    pub mean_timings_ms: Timings,
    pub results: Vec<PairOutcome>,
    pub failures: Vec<PairFailure>,
}

impl BatchSummary {
    pub fn exit_code(&self) -> i32 {
        if self.errors > 0 {
            EXIT_ERROR
        } else if self.failed > 0 {
            EXIT_FAIL
        } else {
            EXIT_PASS
        }
    }
}

fn summarize(outcomes: Vec<(String, std::result::Result<QualityReport, String>)>) -> BatchSummary {
    let mut grade_counts: BTreeMap<String, usize> =
        [Grade::Poor, Grade::Fair, Grade::Good, Grade::Excellent]
            .iter()
            .map(|g| (g.as_str().to_string(), 0))
            .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut sum = Timings::default();
    let total = outcomes.len();
    for (pair_id, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                *grade_counts
                    .entry(r.grade.as_str().to_string())
                    .or_default() += 1;
                let t = r.timings_ms;
                sum.load += t.load;
                sum.preprocess += t.preprocess;
                sum.masks += t.masks;
                sum.mask_metrics += t.mask_metrics;
                sum.deform_metrics += t.deform_metrics;
                sum.total += t.total;
                results.push(PairOutcome {
                    pair_id,
                    unified_score: r.unified_score,
                    grade: r.grade,
                    verdict: r.verdict,
                });
            }
            Err(error) => failures.push(PairFailure { pair_id, error }),
        }
    }
    let n = results.len().max(1) as f64;
    let mean_timings_ms = Timings {
        load: sum.load / n,
        preprocess: sum.preprocess / n,
        masks: sum.masks / n,
        mask_metrics: sum.mask_metrics / n,
        deform_metrics: sum.deform_metrics / n,
        total: sum.total / n,
    };
    results.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    failures.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    let passed = results
        .iter()
        .filter(|r| r.verdict == Verdict::Pass)
        .count();
    BatchSummary {
        total,
        evaluated: results.len(),
        errors: failures.len(),
        passed,
        failed: results.len() - passed,
        grade_counts,
        mean_timings_ms,
        results,
        failures,
    }
}

/// Evaluates every manifest entry on a pool of `workers` threads. Reports go
/// to `<out>/pairs/<pair_id>.json` and the summary to `<out>/summary.json`.
/// Per-pair errors are recorded in the summary and never abort the batch.
pub fn run_batch(
    manifest: &Manifest,
    cfg: &EvalConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<BatchSummary> {
    cfg.validate()?;
    let pairs_dir = out_dir.join("pairs");
    fs::create_dir_all(&pairs_dir).map_err(UrqaError::from)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let outcomes = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let outcome = run_single(entry, cfg, Some(&pairs_dir), &Diagnostics::default())
                    .map_err(|e| match e {
                        CliError::Pair { source, .. } => source.to_string(),
                        other => other.to_string(),
                    });
                (entry.pair_id.clone(), outcome)
            })
            .collect::<Vec<_>>()
    });
    let summary = summarize(outcomes);
    let text = serde_json::to_string_pretty(&summary).map_err(UrqaError::from)?;
    fs::write(out_dir.join("summary.json"), text + "\n").map_err(UrqaError::from)?;
    Ok(summary)
}
