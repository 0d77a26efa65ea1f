//! Command-line driver: codebook training, watermark embedding and
//! extraction, single attacks, and the full evaluation harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vqmark::attacks::{apply_attack, AttackSpec};
use vqmark::codebook::{
    average_distortion, grid_for_size, train_lbg_traced, train_sofm, Codebook, LbgParams,
    SofmParams,
};
use vqmark::error::VqError;
use vqmark::image::{extract_channel, load_image, save_image, to_blocks, RasterImage};
use vqmark::metrics::{self, QualityReport};
use vqmark::partition::build_partition;
use vqmark::vqcodec::{decode_image, encode_image, EncodedImage, CONTAINER_MAGIC};
use vqmark::watermark::{
    embed, extract_from_image, extract_from_indices, EmbedKey, Watermark,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "vqmark",
    version,
    about = "VQ image compression with index-domain watermarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a codebook on the blocks of one or more images
    Train(TrainArgs),
    /// Compress a host image and embed a watermark into its indices
    Embed(EmbedArgs),
    /// Extract a watermark from a container or a decoded image
    Extract(ExtractArgs),
    /// Apply a single attack to an image
    Attack(AttackArgs),
    /// Run embed, decode, attack battery and metrics in one pass
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TrainerKind {
    Sofm,
    Lbg,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Training images (PGM/PPM); blocks come from channel 0
    #[arg(long = "image", required = true, num_args = 1..)]
    images: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "sofm")]
    trainer: TrainerKind,
    /// Codebook size (even, at least 2)
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 4)]
    block_side: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Epochs for the SOFM trainer
    #[arg(long)]
    epochs: Option<usize>,
    /// Relative-improvement stopping threshold for LBG
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration cap for LBG
    #[arg(long)]
    max_iters: Option<usize>,
    /// Edge-replicate images whose dimensions are not multiples of the
    /// block side
    #[arg(long, default_value_t = false)]
    pad: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EmbedArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// Watermark bitmap (PGM; samples >= 128 are ones)
    #[arg(long)]
    watermark: PathBuf,
    /// Secret embedding key
    #[arg(long)]
    key: u64,
    /// Output container path
    #[arg(long)]
    out: PathBuf,
    /// Also write the decoded watermarked image here
    #[arg(long)]
    preview: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    pad: bool,
}

#[derive(Args, Serialize)]
struct ExtractArgs {
    /// Container (VQIX) or image (PGM/PPM); detected by magic bytes
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    key: u64,
    /// Watermark side length M (bitmap is MxM)
    #[arg(long, default_value_t = 64)]
    side: usize,
    /// Output watermark PGM
    #[arg(long)]
    out: PathBuf,
    /// Reference watermark; when given, quality metrics are reported
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the metrics JSON here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    pad: bool,
}

#[derive(Args, Serialize)]
struct AttackArgs {
    #[arg(long)]
    input: PathBuf,
    /// Attack spec as inline JSON, e.g. {"kind":"median","params":{"window":3}}
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    /// Attack spec read from a JSON file
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Unmarked original, needed by cropQuarter with fill=original
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    watermark: PathBuf,
    #[arg(long)]
    key: u64,
    /// JSON file holding an array of attack specs
    #[arg(long)]
    suite: PathBuf,
    /// Report JSON output path
    #[arg(long)]
    out: PathBuf,
    /// Also print a plain-text table of the rows
    #[arg(long, default_value_t = false)]
    table: bool,
    #[arg(long, default_value_t = false)]
    pad: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_class(&err))
        }
    }
}

/// 2 = validation, 3 = i/o or malformed file, 4 = capacity.
fn exit_class(err: &VqError) -> u8 {
    match err {
        VqError::Parameter(_)
        | VqError::Dimension(_)
        | VqError::Undefined(_)
        | VqError::CodebookMismatch { .. } => 2,
        VqError::Io(_) | VqError::Format { .. } => 3,
        VqError::Capacity { .. } => 4,
    }
}

fn log_config(command: &str, args: &impl Serialize) {
    let mut value = serde_json::json!({
        "tool": "vqmark",
        "version": VERSION,
        "command": command,
    });
    let obj = value.as_object_mut().unwrap();
    if let serde_json::Value::Object(fields) = serde_json::to_value(args).unwrap() {
        obj.extend(fields);
    }
    eprintln!("config: {value}");
}

fn load_host(path: &Path, block_side: usize, pad: bool) -> Result<RasterImage, VqError> {
    let img = load_image(path)?;
    if pad {
        img.pad_to_multiple(block_side)
    } else {
        Ok(img)
    }
}

fn load_watermark_file(path: &Path) -> Result<Watermark, VqError> {
    Watermark::from_image(&load_image(path)?)
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn cmd_train(args: TrainArgs) -> Result<(), VqError> {
    log_config("train", &args);
    let mut vectors = Vec::new();
    for path in &args.images {
        let img = load_host(path, args.block_side, args.pad)?;
        let plane = extract_channel(&img, 0)?;
        vectors.extend(to_blocks(&plane, args.block_side)?.blocks);
    }

    let started = Instant::now();
    let codebook = match args.trainer {
        TrainerKind::Sofm => {
            let (rows, cols) = grid_for_size(args.size)?;
            let mut params = SofmParams::for_grid(rows, cols, args.seed);
            if let Some(epochs) = args.epochs {
                params.epochs = epochs;
            }
            train_sofm(&vectors, &params)?
        }
        TrainerKind::Lbg => {
            let mut params = LbgParams::new(args.size, args.seed);
            if let Some(epsilon) = args.epsilon {
                params.epsilon = epsilon;
            }
            if let Some(max_iters) = args.max_iters {
                params.max_iters = max_iters;
            }
            let (codebook, trace) = train_lbg_traced(&vectors, &params)?;
            eprintln!(
                "distortion trace: {}",
                trace
                    .iter()
                    .map(|d| format!("{d:.3}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            codebook
        }
    };
    let elapsed = started.elapsed();
    let distortion = average_distortion(&vectors, &codebook)?;
    codebook.save(&args.out)?;
    println!(
        "trained {} codewords (dim {}) on {} blocks in {:.3}s; final distortion {:.4}; wrote {}",
        codebook.size(),
        codebook.dim,
        vectors.len(),
        elapsed.as_secs_f64(),
        distortion,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

fn cmd_embed(args: EmbedArgs) -> Result<(), VqError> {
    log_config("embed", &args);
    let codebook = Codebook::load(&args.codebook)?;
    let host = load_host(&args.host, codebook.block_side().max(1), args.pad)?;
    let wm = load_watermark_file(&args.watermark)?;
    let pc = build_partition(&codebook)?;

    let encoded = encode_image(&host, &codebook)?;
    let marked = embed(&encoded, &pc, &wm, EmbedKey(args.key))?;
    marked.save(&args.out)?;

    let decoded = decode_image(&marked, &codebook)?;
    let psnr = metrics::psnr(&host, &decoded)?;
    if let Some(preview) = &args.preview {
        save_image(&decoded, preview)?;
    }
    println!(
        "embedded {}x{} watermark at {} of {} blocks; PSNR vs host {:.4} dB; wrote {}",
        wm.side,
        wm.side,
        wm.len(),
        encoded.blocks_per_channel(),
        psnr,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

fn cmd_extract(args: ExtractArgs) -> Result<(), VqError> {
    log_config("extract", &args);
    let codebook = Codebook::load(&args.codebook)?;
    let pc = build_partition(&codebook)?;
    let bytes = std::fs::read(&args.input)?;
    let key = EmbedKey(args.key);

    let wm = if bytes.starts_with(CONTAINER_MAGIC) {
        let enc = EncodedImage::from_bytes(&bytes)?;
        extract_from_indices(&enc, &pc, key, args.side)?
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        let mut img = vqmark::image::parse_netpbm(&bytes)?;
        if args.pad {
            img = img.pad_to_multiple(codebook.block_side().max(1))?;
        }
        extract_from_image(&img, &codebook, &pc, key, args.side)?
    } else {
        return Err(VqError::format(
            0,
            "input is neither a VQIX container nor a binary PGM/PPM image",
        ));
    };

    save_image(&wm.to_image(), &args.out)?;
    println!("extracted {}x{} watermark to {}", wm.side, wm.side, args.out.display());

    if let Some(reference_path) = &args.reference {
        let reference = load_watermark_file(reference_path)?;
        let report = QualityReport {
            psnr_db: metrics::psnr(&reference.to_image(), &wm.to_image())?,
            nc: metrics::nc(&reference, &wm)?,
            bcr_percent: metrics::bcr(&reference, &wm)?,
            mae: metrics::mae(&reference, &wm)?,
            bpp: metrics::index_bpp(codebook.size(), codebook.block_side().max(1)),
        };
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        match &args.report {
            Some(path) => std::fs::write(path, json)?,
            None => println!("{json}"),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

fn cmd_attack(args: AttackArgs) -> Result<(), VqError> {
    log_config("attack", &args);
    let json = match (&args.spec, &args.spec_file) {
        (Some(inline), None) => inline.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)?,
        _ => {
            return Err(VqError::parameter(
                "exactly one of --spec or --spec-file is required",
            ))
        }
    };
    let spec = AttackSpec::from_json(&json)?;
    let img = load_image(&args.input)?;
    let reference = match &args.reference {
        Some(path) => Some(load_image(path)?),
        None => None,
    };
    let attacked = apply_attack(&img, &spec, reference.as_ref())?;
    save_image(&attacked, &args.out)?;
    println!("applied {}; wrote {}", spec.label(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ReportRow {
    attack: Option<AttackSpec>,
    label: String,
    metrics: QualityReport,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), VqError> {
    log_config("evaluate", &args);
    let codebook = Codebook::load(&args.codebook)?;
    let host = load_host(&args.host, codebook.block_side().max(1), args.pad)?;
    let wm = load_watermark_file(&args.watermark)?;
    let pc = build_partition(&codebook)?;
    let key = EmbedKey(args.key);

    let suite_json = std::fs::read_to_string(&args.suite)?;
    let suite: Vec<AttackSpec> = serde_json::from_str(&suite_json)
        .map_err(|e| VqError::parameter(format!("bad attack suite: {e}")))?;

    let encoded = encode_image(&host, &codebook)?;
    let marked = embed(&encoded, &pc, &wm, key)?;
    let marked_img = decode_image(&marked, &codebook)?;
    let bpp = metrics::index_bpp(codebook.size(), codebook.block_side().max(1));

    let quality = |extracted: &Watermark, attacked: &RasterImage| -> Result<QualityReport, VqError> {
        Ok(QualityReport {
            psnr_db: metrics::psnr(&host, attacked)?,
            nc: metrics::nc(&wm, extracted)?,
            bcr_percent: metrics::bcr(&wm, extracted)?,
            mae: metrics::mae(&wm, extracted)?,
            bpp,
        })
    };

    let baseline_extract = extract_from_image(&marked_img, &codebook, &pc, key, wm.side)?;
    let mut rows = vec![ReportRow {
        attack: None,
        label: "(none)".to_string(),
        metrics: quality(&baseline_extract, &marked_img)?,
    }];

    let run_one = |spec: &AttackSpec| -> Result<ReportRow, VqError> {
        let attacked = apply_attack(&marked_img, spec, Some(&host))
            .map_err(|e| VqError::parameter(format!("attack {} failed: {e}", spec.label())))?;
        let extracted = extract_from_image(&attacked, &codebook, &pc, key, wm.side)
            .map_err(|e| VqError::parameter(format!("extraction after {} failed: {e}", spec.label())))?;
        Ok(ReportRow {
            attack: Some(*spec),
            label: spec.label(),
            metrics: quality(&extracted, &attacked)?,
        })
    };

    let attack_rows: Vec<Result<ReportRow, VqError>> = match thread_pool()? {
        Some(pool) => pool.install(|| {
            use rayon::prelude::*;
            suite.par_iter().map(run_one).collect()
        }),
        None => {
            use rayon::prelude::*;
            suite.par_iter().map(run_one).collect()
        }
    };
    for row in attack_rows {
        rows.push(row?);
    }

    let report = serde_json::json!({
        "tool": "vqmark",
        "version": VERSION,
        "config": {
            "host": args.host,
            "codebook": args.codebook,
            "watermark": args.watermark,
            "key": args.key,
            "suite": args.suite,
            "pad": args.pad,
            "block_side": codebook.block_side(),
            "codebook_size": codebook.size(),
            "trainer": codebook.meta.trainer.to_string(),
            "watermark_side": wm.side,
        },
        "codebook_hash": format!("{:#018x}", codebook.content_hash()),
        "rows": rows,
    });
    std::fs::write(
        &args.out,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;

    if args.table {
        println!(
            "{:<28} {:>8} {:>8} {:>8} {:>10}",
            "attack", "NC", "MAE", "BCR(%)", "PSNR(dB)"
        );
        for row in &rows {
            println!(
                "{:<28} {:>8.4} {:>8.4} {:>8.2} {:>10}",
                row.label,
                row.metrics.nc,
                row.metrics.mae,
                row.metrics.bcr_percent,
                if row.metrics.psnr_db.is_finite() {
                    format!("{:.2}", row.metrics.psnr_db)
                } else {
                    "inf".to_string()
                }
            );
        }
    }
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

/// Optional private pool honoring VQMARK_THREADS (0 or unset = default).
fn thread_pool() -> Result<Option<rayon::ThreadPool>, VqError> {
    match std::env::var("VQMARK_THREADS") {
        Err(_) => Ok(None),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .map_err(|_| VqError::parameter(format!("bad VQMARK_THREADS value {raw:?}")))?;
            if n == 0 {
                Ok(None)
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| VqError::parameter(format!("thread pool: {e}")))?;
                Ok(Some(pool))
            }
        }
    }
}
