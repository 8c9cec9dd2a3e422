//! Generates a small synthetic dataset, builds the diagnostic weights and
//! runs the full detector on it, then scores the result.
//!
//!     cargo run --example detect_planted

use ama_tal::metrics::{evaluate, EvalOptions, Protocol};
use ama_tal::model::NeckKind;
use ama_tal::pipeline::{Detector, RunConfig};
use ama_tal::synth::{diagnostic_config, diagnostic_weights, gen_dataset, SynthSpec};

fn main() -> ama_tal::Result<()> {
    let spec = SynthSpec {
        seed: 42,
        n_videos: 4,
        empty_videos: 1,
        ..SynthSpec::default()
    };
    let (videos, annotations) = gen_dataset(&spec)?;

    let cfg = RunConfig {
        model: diagnostic_config(&spec, NeckKind::Sppf),
        ..RunConfig::default()
    };
    let weights = diagnostic_weights(&cfg.model, &spec)?;
    let detector = Detector::new(cfg, &weights)?;
    let preds = detector.detect_all(&videos)?;

    for v in &annotations.videos {
        println!("{}", v.video_id);
        for s in &v.segments {
            println!("  truth     label {:>2}  {:8.3} - {:8.3}", s.label, s.start_s, s.end_s);
        }
        for p in preds.iter().filter(|p| p.video_id == v.video_id) {
            println!("  detected  label {:>2}  {:8.3} - {:8.3}  score {:.3}", p.label, p.t_start, p.t_end, p.score);
        }
    }

    let report = evaluate(&preds, &annotations.ground_truth(), Protocol::Map, &EvalOptions::default())?;
    print!("\n{}", report.to_text());
    Ok(())
}
