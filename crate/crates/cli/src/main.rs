use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ceilmatch::labeler::{export_labels, label_traverse, total_counts, LabelConfig};
use ceilmatch::pipeline::{evaluate, read_benchmark, read_results, refine_traverse, write_results, PipelineConfig};
use ceilmatch::refdb::{load_database, CoarseMatches, RefDatabase};
use ceilmatch::synth::{generate_scene, generate_traverse, write_traverse, SceneParams, TraverseParams};
use ceilmatch::GrayImage;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ceilmatch", version, about = "Refine coarse vehicle poses from ceiling images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine every query against its coarse-matched reference.
    Refine(RefineArgs),
    /// Compare a results file with benchmark poses.
    Eval(EvalArgs),
    /// Produce self-supervised point labels for heat-map training.
    Label(LabelArgs),
    /// Generate a synthetic traverse (references, queries, coarse matches, benchmark).
    Synth(SynthArgs),
}

#[derive(Args)]
struct Inputs {
    /// Reference manifest.
    #[arg(long)]
    db: PathBuf,
    /// Query manifest; queries are processed in timestamp order.
    #[arg(long)]
    queries: PathBuf,
    /// Confusion matrix or `query_index,timestamp` match list.
    #[arg(long)]
    coarse: PathBuf,
    /// `key = value` settings on top of the Mine-A preset.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    benchmark: PathBuf,
    /// Frames whose coarse error exceeds this are left out.
    #[arg(long, default_value_t = 10.0)]
    exclude_metres: f64,
}

#[derive(Args)]
struct LabelArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: PathBuf,
    /// Regular-grid points per frame.
    #[arg(long, default_value_t = 24)]
    grid_points: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    frames: usize,
    #[arg(long, default_value_t = 25)]
    references: usize,
    /// Metres between references.
    #[arg(long, default_value_t = 5.0)]
    spacing: f64,
    /// Metres per pixel.
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    #[arg(long, default_value_t = 320)]
    width: usize,
    #[arg(long, default_value_t = 240)]
    height: usize,
    #[arg(long, default_value_t = 1.1)]
    offset_min: f64,
    #[arg(long, default_value_t = 1.9)]
    offset_max: f64,
    /// Query heading perturbation bound in radians.
    #[arg(long, default_value_t = 0.005)]
    max_yaw: f64,
    /// Cap on ground-truth ceiling flow; defaults to the search radius minus one.
    #[arg(long)]
    max_flow: Option<f64>,
    /// Positional noise (metres) before the emulated coarse match.
    #[arg(long, default_value_t = 0.0)]
    coarse_noise: f64,
    /// Image noise standard deviation in grey levels.
    #[arg(long, default_value_t = 2.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    distractors: usize,
    #[arg(long, default_value_t = 0.0)]
    distractor_fraction: f64,
    /// Reference heading jitter in radians.
    #[arg(long, default_value_t = 0.3)]
    heading_jitter: f64,
    /// Settings whose search and patch sizes bound the generated flow.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::read(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(PipelineConfig::mine_a()),
    }
}

fn load_inputs(inputs: &Inputs) -> Result<(RefDatabase, Vec<GrayImage>, CoarseMatches, PipelineConfig)> {
    let db = load_database(&inputs.db).with_context(|| format!("loading {}", inputs.db.display()))?;
    let queries = load_database(&inputs.queries)
        .with_context(|| format!("loading {}", inputs.queries.display()))?
        .entries()
        .iter()
        .map(|e| e.image.clone())
        .collect();
    let coarse = CoarseMatches::read(&inputs.coarse).with_context(|| format!("loading {}", inputs.coarse.display()))?;
    let cfg = load_config(inputs.config.as_deref())?;
    cfg.validate()?;
    Ok((db, queries, coarse, cfg))
}

fn refine(args: &RefineArgs) -> Result<()> {
    let (db, queries, coarse, cfg) = load_inputs(&args.inputs)?;
    let outputs = refine_traverse(&db, &queries, &coarse, &cfg);
    write_results(&args.out, &outputs)?;
    let accepted = outputs.iter().filter(|o| o.refined).count();
    println!("refined {accepted}/{} queries -> {}", outputs.len(), args.out.display());
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let results = read_results(&args.results)?;
    let benchmark = read_benchmark(&args.benchmark)?;
    let r = evaluate(&results, &benchmark, args.exclude_metres)?;
    println!("frames_total {}", r.frames_total);
    println!("frames_evaluated {}", r.frames_evaluated);
    println!("frames_excluded {}", r.frames_excluded);
    println!("mean_error_m {:.4}", r.mean);
    println!("median_error_m {:.4}", r.median);
    println!("max_error_m {:.4}", r.max);
    println!("mean_coarse_error_m {:.4}", r.mean_coarse);
    println!("acceptance_rate {:.4}", r.acceptance_rate);
    if let Some(m) = r.mean_refined {
        println!("mean_refined_error_m {m:.4}");
    }
    if let Some(m) = r.mean_fallback {
        println!("mean_fallback_error_m {m:.4}");
    }
    Ok(())
}

fn label(args: &LabelArgs) -> Result<()> {
    let (db, queries, coarse, cfg) = load_inputs(&args.inputs)?;
    let label_cfg = LabelConfig {
        grid_points: args.grid_points,
        matching: cfg.matching,
        ransac: cfg.ransac,
    };
    let frames = label_traverse(&db, &queries, &coarse, &label_cfg)?;
    if frames.is_empty() {
        bail!("no query has a coarse match; nothing to label");
    }
    export_labels(&frames, &args.out)?;
    let c = total_counts(&frames);
    let unusable = frames.iter().filter(|f| !f.usable).count();
    println!("{} frames ({unusable} unusable), {c} -> {}", frames.len(), args.out.display());
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let scene = generate_scene(
        args.seed,
        &SceneParams {
            scale: args.scale,
            image_width: args.width,
            image_height: args.height,
            references: args.references,
            reference_spacing: args.spacing,
            heading_jitter: args.heading_jitter,
            footprint_pad: args.offset_max + 3.0 * args.coarse_noise,
            distractors: args.distractors,
            distractor_fraction: args.distractor_fraction,
            ..SceneParams::default()
        },
    )?;
    let traverse = generate_traverse(
        &scene,
        &TraverseParams {
            n_frames: args.frames,
            image_width: args.width,
            image_height: args.height,
            offset_min: args.offset_min,
            offset_max: args.offset_max,
            max_yaw: args.max_yaw,
            max_flow_px: args
                .max_flow
                .unwrap_or(cfg.matching.search_radius().saturating_sub(1) as f64),
            flow_margin: cfg.matching.patch_radius(),
            coarse_noise_sigma: args.coarse_noise,
            noise_sigma: args.noise,
            seed: args.seed,
        },
    )?;
    let paths = write_traverse(&traverse, &args.out)?;
    println!("references {}", paths.references.display());
    println!("queries {}", paths.queries.display());
    println!("coarse {}", paths.coarse.display());
    println!("benchmark {}", paths.benchmark.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Refine(a) => refine(a),
        Command::Eval(a) => eval(a),
        Command::Label(a) => label(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
