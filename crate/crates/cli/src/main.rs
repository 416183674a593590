use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use urqa_cli::{exit_code, run_batch, run_single, Diagnostics, Manifest, PairInputs, EXIT_ERROR};
use urqa_core::synth::{make_field, make_mask_pair, make_tissue_image, FieldKind, SynthSpec};
use urqa_core::{viz, EvalConfig, UrqaError};

#[derive(Parser)]
#[command(
    name = "urqa",
    version,
    about = "Ground-truth-free registration quality assessment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one fixed/registered/field triple.
    Eval(EvalArgs),
    /// Score every pair listed in a CSV manifest.
    Batch(BatchArgs),
    /// Write synthetic fields, masks or images.
    Synth(SynthArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    fixed: PathBuf,
    #[arg(long)]
    registered: PathBuf,
    #[arg(long)]
    field: PathBuf,
    /// JSON file overriding EvalConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for `<pair-id>.json`; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "pair")]
    pair_id: String,
    /// Write 1-bit mask PNGs (to DIR, else the output directory).
    #[arg(long, value_name = "DIR", num_args = 0..=1)]
    save_masks: Option<Option<PathBuf>>,
    /// Write magnitude, direction, Jacobian and residual PNGs.
    #[arg(long, value_name = "DIR", num_args = 0..=1)]
    save_deform: Option<Option<PathBuf>>,
    /// Write the red/green mask overlap PNG.
    #[arg(long, value_name = "DIR", num_args = 0..=1)]
    save_overlap: Option<Option<PathBuf>>,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Concurrent evaluations.
    #[arg(long, env = "URQA_THREADS", default_value_t = default_workers())]
    workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    Identity,
    Translation,
    Affine,
    SmoothElastic,
    Folded,
    SpikeNoise,
    Checkerboard,
    /// Two rectangle masks with a target IoU.
    MaskPair,
    /// RGB slide-like image.
    Tissue,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    tx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ty: f64,
    /// Affine matrix `a11,a12,a21,a22`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    matrix: Option<Vec<f64>>,
    /// Affine offset `b1,b2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offset: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 32.0)]
    wavelength: f64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 1000.0)]
    magnitude: f64,
    /// Target IoU for `mask_pair`.
    #[arg(long, default_value_t = 0.8)]
    overlap: f64,
}

fn load_config(path: Option<&Path>) -> Result<EvalConfig, UrqaError> {
    match path {
        Some(p) => EvalConfig::from_json_file(p),
        None => Ok(EvalConfig::default()),
    }
}

/// `--save-x DIR` wins; a bare `--save-x` falls back to `--out`, then `.`.
fn resolve(flag: Option<Option<PathBuf>>, out: Option<&Path>) -> Option<PathBuf> {
    flag.map(|dir| dir.unwrap_or_else(|| out.map_or_else(|| PathBuf::from("."), Path::to_path_buf)))
}

fn eval(args: EvalArgs) -> Result<i32, Box<dyn std::error::Error>> {
    let cfg = load_config(args.config.as_deref())?;
    let out = args.out.as_deref();
    let diag = Diagnostics {
        masks: resolve(args.save_masks, out),
        deform: resolve(args.save_deform, out),
        overlap: resolve(args.save_overlap, out),
    };
    let inputs = PairInputs {
        pair_id: args.pair_id,
        fixed: args.fixed,
        registered: args.registered,
        field: args.field,
    };
    let report = run_single(&inputs, &cfg, out, &diag)?;
    if out.is_none() {
        let mut stdout = std::io::stdout().lock();
        writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    }
    eprintln!(
        "{}: Q={} ({}, M_Q={}, D_Q={}) in {:.1} ms",
        inputs.pair_id,
        report.unified_score,
        report.grade.as_str(),
        report.m_q,
        report.d_q,
        report.timings_ms.total
    );
    Ok(exit_code(&report))
}

fn batch(args: BatchArgs) -> Result<i32, Box<dyn std::error::Error>> {
    let cfg = load_config(args.config.as_deref())?;
    let manifest = Manifest::load(&args.manifest)?;
    let summary = run_batch(&manifest, &cfg, &args.out, args.workers)?;
    eprintln!(
        "{} pairs: {} passed, {} failed, {} errors",
        summary.total, summary.passed, summary.failed, summary.errors
    );
    for f in &summary.failures {
        eprintln!("  {}: {}", f.pair_id, f.error);
    }
    Ok(summary.exit_code())
}

fn synth(args: SynthArgs) -> Result<i32, Box<dyn std::error::Error>> {
    fs::create_dir_all(&args.out)?;
    let field_kind = match args.kind {
        Kind::MaskPair => {
            let pair = make_mask_pair(args.overlap, args.size)?;
            viz::save_mask_png(&pair.fixed, &args.out.join("fixed_mask.png"))?;
            viz::save_mask_png(&pair.registered, &args.out.join("registered_mask.png"))?;
            eprintln!("IoU {}", pair.iou);
            return Ok(0);
        }
        Kind::Tissue => {
            let image = make_tissue_image(args.size, args.size, args.seed)?;
            viz::save_raster_png(&image, &args.out.join("tissue.png"))?;
            return Ok(0);
        }
        Kind::Identity => FieldKind::Identity,
        Kind::Translation => FieldKind::Translation {
            tx: args.tx,
            ty: args.ty,
        },
        Kind::Affine | Kind::Folded => {
            let default = if matches!(args.kind, Kind::Folded) {
                [-2.0, 0.0, 0.0, 0.0]
            } else {
                [0.1, 0.0, 0.0, 0.1]
            };
            let m: [f64; 4] = match args.matrix {
                None => default,
                Some(v) => v
                    .try_into()
                    .map_err(|_| "--matrix takes four values a11,a12,a21,a22")?,
            };
            let b: [f64; 2] = match args.offset {
                None => [0.0; 2],
                Some(v) => v
                    .try_into()
                    .map_err(|_| "--offset takes two values b1,b2")?,
            };
            let a = [[m[0], m[1]], [m[2], m[3]]];
            if matches!(args.kind, Kind::Folded) {
                FieldKind::Folded { a, b }
            } else {
                FieldKind::Affine { a, b }
            }
        }
        Kind::SmoothElastic => FieldKind::SmoothElastic {
            amplitude: args.amplitude,
            wavelength: args.wavelength,
        },
        Kind::SpikeNoise => FieldKind::SpikeNoise {
            count: args.count,
            magnitude: args.magnitude,
        },
        Kind::Checkerboard => FieldKind::Checkerboard {
            amplitude: args.amplitude,
        },
    };
    let spec = SynthSpec::new(field_kind, args.size, args.seed);
    make_field(&spec)?.save_npy(&args.out.join("field.npy"))?;
    fs::write(
        args.out.join("spec.json"),
        serde_json::to_string_pretty(&spec)? + "\n",
    )?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Batch(a) => batch(a),
        Command::Synth(a) => synth(a),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    });
    ExitCode::from(code as u8)
}
