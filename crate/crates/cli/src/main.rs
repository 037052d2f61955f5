use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fgt_core::checkpoint::Checkpoint;
use fgt_core::fgt::FgtModel;
use fgt_core::harness::dataset::{list_clips, read_clip, read_frames, read_masks, write_clip, write_frames, write_masks};
use fgt_core::harness::{
    evaluate_sequence, generate_clip, inpaint_pipeline, interval_axis, number_axis, psnr, random_clip_spec, ssim,
    sweep_flow_window, train_fgt, write_fgt_log, write_sweep_csv, FgtSample, FloDirectory, FlowProvider, RunConfig,
    ZeroFlows,
};
use fgt_core::lafc::{clip_samples, train_lafc, write_lafc_log, LafcModel};
use fgt_core::video::Clip;
use fgt_core::{Error, Result};

type F = f32;

#[derive(Parser)]
#[command(name = "fgt", version, about = "Flow-guided video inpainting")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set fgt.channels=64`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic clips with exact flows and moving masks.
    GenData {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the flow completion network.
    TrainLafc {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss log as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the transformer with the patch discriminator.
    TrainFgt {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Restore the masked regions of a clip directory.
    Inpaint {
        /// Clip directory with `frames/` and `masks/`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        fgt: PathBuf,
        /// Without it, flows are only Laplacian filled.
        #[arg(long)]
        lafc: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FlowArg::Flo)]
        flows: FlowArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score restored frames against a ground-truth clip.
    Evaluate {
        /// Directory holding `frames/` (or the frames themselves).
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Per-frame metrics as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// EPE against flow window length and spacing.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Axis::Number)]
        axis: Axis,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    /// `flows_fwd/` and `flows_bwd/` `.flo` files in the input directory.
    Flo,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Number,
    Interval,
}

fn tagged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => other.at(stage),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn load_clips(root: &Path) -> Result<Vec<Clip<F>>> {
    list_clips(root)?.iter().map(|d| read_clip(d)).collect()
}

fn gen_data(cfg: &RunConfig, out: &Path) -> Result<serde_json::Value> {
    let d = &cfg.data;
    let mut names = Vec::new();
    for i in 0..d.clips {
        let seed = d.seed.wrapping_add(i as u64);
        let spec = random_clip_spec(seed, d.frames, d.width, d.height, d.sprites, d.max_speed, d.mask);
        let clip = generate_clip::<F>(&spec)?.clip;
        let name = format!("clip_{i:03}");
        write_clip(&out.join(&name), &clip, Some(seed))?;
        names.push(name);
    }
    let summary = json!({ "clips": names, "frames": d.frames, "width": d.width, "height": d.height, "seed": d.seed });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn run_train_lafc(cfg: &RunConfig, data: &Path, out: &Path, log: Option<&Path>) -> Result<serde_json::Value> {
    let clips = tagged("data", load_clips(data))?;
    let mut samples = Vec::new();
    for c in &clips {
        samples.extend(clip_samples(c, &cfg.lafc)?);
    }
    let trained = train_lafc(&samples, &[], &cfg.lafc, &cfg.lafc_train)?;
    trained.model.to_checkpoint()?.save(out)?;
    if let Some(path) = log {
        write_lafc_log(&trained.log, &mut create(path)?).map_err(|e| Error::io(path, e))?;
    }
    let last = trained.losses.last().map(|l| l.total);
    Ok(json!({ "checkpoint": out, "samples": samples.len(), "iterations": cfg.lafc_train.iterations, "final_loss": last }))
}

fn run_train_fgt(cfg: &RunConfig, data: &Path, out: &Path, log: Option<&Path>) -> Result<serde_json::Value> {
    let clips = tagged("data", load_clips(data))?;
    let samples = clips.iter().map(|c| FgtSample::from_clip(c, &cfg.fgt)).collect::<Result<Vec<_>>>()?;
    let trained = train_fgt(&samples, &cfg.fgt, &cfg.fgt_train)?;
    trained.model.to_checkpoint()?.save(out)?;
    if let Some(path) = log {
        write_fgt_log(&trained.log, &mut create(path)?).map_err(|e| Error::io(path, e))?;
    }
    let last = trained.history.last().map(|r| r.recon);
    Ok(json!({ "checkpoint": out, "clips": samples.len(), "iterations": cfg.fgt_train.iterations, "final_recon": last }))
}

fn run_inpaint(cfg: &RunConfig, input: &Path, fgt: &Path, lafc: Option<&Path>, flows: FlowArg, out: &Path) -> Result<serde_json::Value> {
    let frames = tagged("input", read_frames::<F>(&input.join("frames")))?;
    let masks = tagged("input", read_masks(&input.join("masks")))?;
    let fgt = tagged("checkpoint", Checkpoint::load(fgt).and_then(|c| FgtModel::<F>::from_checkpoint(&c)))?;
    let lafc = match lafc {
        Some(p) => Some(tagged("checkpoint", Checkpoint::load(p).and_then(|c| LafcModel::<F>::from_checkpoint(&c)))?),
        None => None,
    };
    let provider: Box<dyn FlowProvider<F>> = match flows {
        FlowArg::Flo => Box::new(FloDirectory { root: input.to_path_buf() }),
        FlowArg::Zero => Box::new(ZeroFlows),
    };
    let result = inpaint_pipeline(&frames, &masks, provider.as_ref(), &cfg.pipeline, lafc.as_ref(), &fgt)?;
    tagged("output", write_frames(&out.join("frames"), &result.frames))?;
    tagged("output", write_masks(&out.join("masks"), &masks))?;
    let summary = json!({
        "frames": result.frames.len(),
        "holes": masks.iter().map(|m| m.count()).sum::<usize>(),
        "stages": result.stages,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn run_evaluate(pred: &Path, gt: &Path, csv: Option<&Path>) -> Result<serde_json::Value> {
    let pred_dir = if pred.join("frames").is_dir() { pred.join("frames") } else { pred.to_path_buf() };
    let pred = tagged("input", read_frames::<F>(&pred_dir))?;
    let clip = tagged("input", read_clip::<F>(gt))?;
    if pred.len() != clip.len() {
        return Err(Error::Shape(format!("{} predicted frames vs {} ground truth", pred.len(), clip.len())).at("input"));
    }
    let report = evaluate_sequence(&pred, &clip.frames, &clip.masks)?;
    if let Some(path) = csv {
        use std::io::Write;
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "frame,psnr_hole,psnr_full,ssim").map_err(io)?;
        for (i, (p, g)) in pred.iter().zip(&clip.frames).enumerate() {
            let hole = psnr(p, g, &clip.masks[i]).ok().map(|v| v.to_string()).unwrap_or_default();
            let full = psnr(p, g, &fgt_core::flowcore::RegionMask::full(g.width(), g.height()))?;
            let s = ssim(p, g).ok().map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{i},{hole},{full},{s}").map_err(io)?;
        }
    }
    Ok(serde_json::to_value(report).map_err(|e| Error::Format(e.to_string()))?)
}

fn run_sweep(cfg: &RunConfig, data: &Path, out: &Path, axis: Axis) -> Result<serde_json::Value> {
    let clips = tagged("data", load_clips(data))?;
    let s = &cfg.sweep;
    if s.val_clips == 0 || s.val_clips >= clips.len() {
        return Err(Error::Config(format!("sweep.val_clips must be in 1..{}, got {}", clips.len(), s.val_clips)));
    }
    let (train, val) = clips.split_at(clips.len() - s.val_clips);
    let settings = match axis {
        Axis::Number => number_axis(&s.numbers, s.fixed_interval),
        Axis::Interval => interval_axis(&s.intervals, s.fixed_number),
    };
    let rows = sweep_flow_window(train, val, &settings, &cfg.lafc, &cfg.lafc_train, &s.seeds)?;
    write_sweep_csv(&rows, &mut create(out)?).map_err(|e| Error::io(out, e))?;
    Ok(serde_json::to_value(&rows).map_err(|e| Error::Format(e.to_string()))?)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let cfg = tagged("config", RunConfig::load(cli.common.config.as_deref(), &cli.common.overrides))?;
    match cli.command {
        Command::GenData { out } => tagged("gen-data", gen_data(&cfg, &out)),
        Command::TrainLafc { data, out, log } => tagged("train-lafc", run_train_lafc(&cfg, &data, &out, log.as_deref())),
        Command::TrainFgt { data, out, log } => tagged("train-fgt", run_train_fgt(&cfg, &data, &out, log.as_deref())),
        Command::Inpaint {
            input,
            fgt,
            lafc,
            flows,
            out,
        } => tagged("inpaint", run_inpaint(&cfg, &input, &fgt, lafc.as_deref(), flows, &out)),
        Command::Evaluate { pred, gt, csv } => tagged("evaluate", run_evaluate(&pred, &gt, csv.as_deref())),
        Command::Sweep { data, out, axis } => tagged("sweep", run_sweep(&cfg, &data, &out, axis)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
