//! The `ama` command line.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 configuration
//! or weight mismatch (including bad arguments), 4 predictions and ground
//! truth that cannot be evaluated together.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ensemble::{ensemble, FusionMode, SourcedPrediction};
use crate::error::{Error, Result};
use crate::io::{
    decode_features, decode_weights, read_annotations, read_features, read_predictions, read_weights, weights_manifest,
    write_annotations, write_features, write_predictions, FeatureSequence, FEATURE_MAGIC, WEIGHTS_MAGIC,
};
use crate::metrics::{evaluate, EvalOptions, Protocol};
use crate::model::NeckKind;
use crate::pipeline::{Detector, RunConfig};
use crate::synth::{diagnostic_config, diagnostic_weights, gen_dataset, PlantLayout, PlantShape, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "ama", version, about = "Temporal action localization on chunk features")]
pub struct Cli {
    /// Log progress to stderr and write a `<output>.run.json` sidecar.
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the detector over feature files and write predictions.
    Detect(DetectArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Fuse prediction files from several models.
    Ensemble(EnsembleArgs),
    /// Write a seeded synthetic dataset with matching diagnostic weights.
    Synth(SynthArgs),
    /// Print the header or manifest of a file as JSON.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// AMAF files, or directories searched for `*.amaf`.
    #[arg(long = "features", required = true, num_args = 1..)]
    pub features: Vec<PathBuf>,
    #[arg(long)]
    pub weights: PathBuf,
    /// Run config JSON (`{"model": {...}, "postprocess": {...}}`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Predictions file; `.csv` selects CSV, anything else JSON lines.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_neck)]
    pub neck: Option<NeckKind>,
    #[arg(long)]
    pub pre_nms_thresh: Option<f64>,
    #[arg(long = "pre-nms-topk")]
    pub pre_nms_topk: Option<usize>,
    #[arg(long)]
    pub nms_iou: Option<f64>,
    #[arg(long)]
    pub min_score: Option<f64>,
    /// Minimum segment length in chunks.
    #[arg(long)]
    pub min_duration: Option<f64>,
    #[arg(long)]
    pub feat_stride: Option<usize>,
    /// Overrides the frame rate stored in each feature file.
    #[arg(long)]
    pub fps: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Annotation JSON.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value = "map", value_parser = parse_protocol)]
    pub protocol: Protocol,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated tIoU thresholds for mAP.
    #[arg(long, value_delimiter = ',')]
    pub tiou: Option<Vec<f64>>,
    /// Score floor for precision / recall / F1.
    #[arg(long, default_value_t = 0.5)]
    pub score_min: f64,
    /// tIoU for precision / recall / F1.
    #[arg(long, default_value_t = 0.5)]
    pub prf_tiou: f64,
    /// Leave unmatched predictions out of the AI City average.
    #[arg(long)]
    pub ignore_unmatched_predictions: bool,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Prediction files, one per model.
    #[arg(long = "inputs", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "weighted", value_parser = parse_fusion)]
    pub mode: FusionMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub videos: usize,
    /// Background-only videos added after the planted ones.
    #[arg(long, default_value_t = 0)]
    pub empty_videos: usize,
    #[arg(long, default_value_t = 256)]
    pub chunks: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 16)]
    pub classes: u32,
    #[arg(long, default_value_t = 4)]
    pub per_video: usize,
    #[arg(long, default_value_t = 8)]
    pub duration: usize,
    #[arg(long, default_value_t = 4.0)]
    pub amplitude: f32,
    #[arg(long, default_value = "triangular", value_parser = parse_shape)]
    pub shape: PlantShape,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f32,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    /// Neck recorded in the written config.
    #[arg(long, default_value = "sppf", value_parser = parse_neck)]
    pub neck: NeckKind,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
}

fn parse_neck(s: &str) -> std::result::Result<NeckKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_protocol(s: &str) -> std::result::Result<Protocol, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_fusion(s: &str) -> std::result::Result<FusionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_shape(s: &str) -> std::result::Result<PlantShape, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let manifest = match &cli.command {
        Command::Detect(a) => run_detect(a)?,
        Command::Eval(a) => run_eval(a)?,
        Command::Ensemble(a) => run_ensemble(a)?,
        Command::Synth(a) => run_synth(a)?,
        Command::Inspect(a) => {
            run_inspect(a)?;
            return Ok(());
        }
    };
    if cli.verbose {
        if let Some(out) = &manifest.output {
            let sidecar = sidecar_path(out);
            let meta = serde_json::json!({
                "manifest": manifest,
                "elapsed_ms": started.elapsed().as_millis() as u64,
                "threads": rayon::current_num_threads(),
                "version": env!("CARGO_PKG_VERSION"),
            });
            write_text(&sidecar, &(serde_json::to_string_pretty(&meta).expect("json") + "\n"))?;
            log::info!("run metadata written to {}", sidecar.display());
        }
    }
    Ok(())
}

/// What a run read and wrote, recorded in the `--verbose` sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub inputs: Vec<PathBuf>,
    pub config: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub settings: serde_json::Value,
    pub seed: Option<u64>,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")))
    }
}

/// Expands directories to their `*.amaf` files, sorted by name.
fn feature_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| Error::io(p, e))?;
            let mut found = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| Error::io(p, e))?.path();
                if path.extension().is_some_and(|x| x == "amaf") {
                    found.push(path);
                }
            }
            found.sort();
            out.extend(found);
        } else {
            require_file(p)?;
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

fn apply_overrides(cfg: &mut RunConfig, a: &DetectArgs) {
    let p = &mut cfg.postprocess;
    if let Some(v) = a.pre_nms_thresh {
        p.pre_nms_thresh = v;
    }
    if let Some(v) = a.pre_nms_topk {
        p.pre_nms_topk = v;
    }
    if let Some(v) = a.nms_iou {
        p.nms_iou = v;
    }
    if let Some(v) = a.min_score {
        p.min_score = v;
    }
    if let Some(v) = a.min_duration {
        p.min_duration = v;
    }
    if let Some(v) = a.feat_stride {
        p.feat_stride = v;
        cfg.model.feat_stride = v;
    }
    if let Some(n) = a.neck {
        cfg.model.neck = n;
    }
}

pub fn run_detect(a: &DetectArgs) -> Result<RunManifest> {
    let files = feature_files(&a.features)?;
    require_file(&a.weights)?;
    let mut cfg = match &a.config {
        Some(path) => read_run_config(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, a);
    if let Some(fps) = a.fps {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::config(format!("--fps must be positive, got {fps}")));
        }
    }
    if a.threads == Some(0) {
        return Err(Error::config("--threads must be >= 1"));
    }
    let videos: Vec<FeatureSequence> = files.iter().map(read_features).collect::<Result<_>>()?;
    let weights = read_weights(&a.weights)?;
    let detector = Detector::new(cfg.clone(), &weights)?.with_fps(a.fps);
    log::info!("{} video(s), neck {:?}", videos.len(), cfg.model.neck);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let preds = pool.install(|| detector.detect_all(&videos))?;
    log::info!("{} detection(s)", preds.len());
    write_predictions(&a.out, &preds)?;

    let mut inputs = files;
    inputs.push(a.weights.clone());
    Ok(RunManifest {
        subcommand: "detect",
        inputs,
        config: a.config.clone(),
        output: Some(a.out.clone()),
        settings: serde_json::to_value(&cfg).expect("json"),
        seed: None,
    })
}

pub fn run_eval(a: &EvalArgs) -> Result<RunManifest> {
    let preds = read_predictions(&a.pred)?;
    let gt = read_annotations(&a.gt)?;
    let mut opts = EvalOptions {
        prf_tiou: a.prf_tiou,
        prf_score_min: a.score_min,
        ..EvalOptions::default()
    };
    if let Some(t) = &a.tiou {
        opts.tious = t.clone();
    }
    for &t in opts.tious.iter().chain([&opts.prf_tiou, &opts.prf_score_min]) {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::config(format!("threshold {t} outside [0, 1]")));
        }
    }
    opts.aicity.count_unmatched_predictions = !a.ignore_unmatched_predictions;
    let report = evaluate(&preds, &gt.ground_truth(), a.protocol, &opts)?;
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        write_text(out, &report.to_json())?;
    }
    Ok(RunManifest {
        subcommand: "eval",
        inputs: vec![a.pred.clone(), a.gt.clone()],
        config: None,
        output: a.out.clone(),
        settings: serde_json::json!({
            "protocol": a.protocol,
            "tious": opts.tious,
            "prf_tiou": opts.prf_tiou,
            "score_min": opts.prf_score_min,
            "aicity": opts.aicity,
        }),
        seed: None,
    })
}

pub fn run_ensemble(a: &EnsembleArgs) -> Result<RunManifest> {
    let mut all = Vec::new();
    for (source, path) in a.inputs.iter().enumerate() {
        for pred in read_predictions(path)? {
            all.push(SourcedPrediction { source, pred });
        }
    }
    let fused = ensemble(&all, a.mode);
    write_predictions(&a.out, &fused)?;
    Ok(RunManifest {
        subcommand: "ensemble",
        inputs: a.inputs.clone(),
        config: None,
        output: Some(a.out.clone()),
        settings: serde_json::json!({ "mode": a.mode }),
        seed: None,
    })
}

pub fn synth_spec(a: &SynthArgs) -> SynthSpec {
    SynthSpec {
        seed: a.seed,
        n_videos: a.videos,
        empty_videos: a.empty_videos,
        n_chunks: a.chunks,
        dim: a.dim,
        classes: (1..=a.classes).collect(),
        layout: PlantLayout::Random {
            per_video: a.per_video,
            duration_chunks: a.duration,
        },
        amplitude: a.amplitude,
        shape: a.shape,
        noise_std: a.noise,
        fps: a.fps,
        frames_per_chunk: 16,
    }
}

/// Writes `features/*.amaf`, `annotations.json`, `weights.amaw` and
/// `config.json` under the output directory.
pub fn run_synth(a: &SynthArgs) -> Result<RunManifest> {
    let spec = synth_spec(a);
    let (videos, annotations) = gen_dataset(&spec)?;
    let cfg = RunConfig {
        model: diagnostic_config(&spec, a.neck),
        ..RunConfig::default()
    };
    let weights = diagnostic_weights(&cfg.model, &spec)?;

    let feature_dir = a.out_dir.join("features");
    create_dir(&feature_dir)?;
    for v in &videos {
        write_features(feature_dir.join(format!("{}.amaf", v.video_id)), v)?;
    }
    write_annotations(a.out_dir.join("annotations.json"), &annotations)?;
    crate::io::write_weights(a.out_dir.join("weights.amaw"), &weights)?;
    let cfg_text = serde_json::to_string_pretty(&cfg).expect("json") + "\n";
    write_text(&a.out_dir.join("config.json"), &cfg_text)?;
    println!("{} video(s) written to {}", videos.len(), a.out_dir.display());
    Ok(RunManifest {
        subcommand: "synth",
        inputs: Vec::new(),
        config: None,
        output: Some(a.out_dir.join("annotations.json")),
        settings: serde_json::to_value(&spec).expect("json"),
        seed: Some(a.seed),
    })
}

pub fn run_inspect(a: &InspectArgs) -> Result<()> {
    let bytes = std::fs::read(&a.path).map_err(|e| Error::io(&a.path, e))?;
    let label = a.path.display().to_string();
    let value = if bytes.starts_with(FEATURE_MAGIC) {
        let seq = decode_features(&bytes, &label)?;
        let data = seq.data().data();
        let (lo, hi) = data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let mean = data.iter().map(|&v| v as f64).sum::<f64>() / data.len() as f64;
        serde_json::json!({
            "format": "AMAF",
            "header": seq.header(),
            "min": lo,
            "max": hi,
            "mean": mean,
        })
    } else if bytes.starts_with(WEIGHTS_MAGIC) {
        let bundle = decode_weights(&bytes, &label)?;
        serde_json::json!({
            "format": "AMAW",
            "tensors": bundle.len(),
            "parameters": bundle.iter().map(|(_, t)| t.len()).sum::<usize>(),
            "manifest": weights_manifest(&bundle),
        })
    } else if let Ok(set) = read_annotations(&a.path) {
        serde_json::json!({
            "format": "annotations",
            "videos": set.videos.len(),
            "segments": set.videos.iter().map(|v| v.segments.len()).sum::<usize>(),
        })
    } else {
        let preds = read_predictions(&a.path)?;
        let videos: std::collections::BTreeSet<&str> = preds.iter().map(|p| p.video_id.as_str()).collect();
        serde_json::json!({
            "format": "predictions",
            "videos": videos.len(),
            "predictions": preds.len(),
        })
    };
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/x/preds.jsonl")), PathBuf::from("/x/preds.jsonl.run.json"));
    }

    #[test]
    fn argument_parsing() {
        assert!(Cli::try_parse_from(["ama", "detect"]).is_err());
        assert!(Cli::try_parse_from(["ama", "eval", "--pred", "a", "--gt", "b", "--protocol", "bogus"]).is_err());
        let cli = Cli::try_parse_from(["ama", "eval", "--pred", "a", "--gt", "b", "--tiou", "0.3,0.7"]).unwrap();
        match cli.command {
            Command::Eval(a) => assert_eq!(a.tiou, Some(vec![0.3, 0.7])),
            other => panic!("parsed {other:?}"),
        }
    }
}
