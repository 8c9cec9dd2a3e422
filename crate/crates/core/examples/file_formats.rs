//! Writes and reads back each on-disk format in a temporary directory.
//!
//!     cargo run --example file_formats

use ama_tal::io::{
    read_features, read_predictions, read_weights, weights_manifest, write_features, write_predictions, write_weights,
    FeatureSequence, PredictionRecord,
};
use ama_tal::model::AmaConfig;
use ama_tal::numerics::Matrix;
use ama_tal::synth::random_weights;

fn main() -> ama_tal::Result<()> {
    let dir = std::env::temp_dir().join(format!("ama-formats-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");

    let seq = FeatureSequence::new("clip_7", 30.0, 16, Matrix::from_fn(6, 4, |r, c| r as f32 * 0.5 - c as f32))?;
    write_features(dir.join("clip_7.amaf"), &seq)?;
    let back = read_features(dir.join("clip_7.amaf"))?;
    println!("features: {:?}, identical: {}", back.header(), back.data() == seq.data());

    let cfg = AmaConfig {
        input_dim: 4,
        channels: 8,
        num_classes: 2,
        allow_any_input_dim: true,
        ..AmaConfig::default()
    };
    let bundle = random_weights(&cfg, 1, 1.0)?;
    write_weights(dir.join("model.amaw"), &bundle)?;
    let loaded = read_weights(dir.join("model.amaw"))?;
    loaded.validate(&cfg)?;
    println!("weights: {} tensors, first entries:", loaded.len());
    for e in weights_manifest(&loaded).iter().take(3) {
        println!("  {} {:?} @ {}", e.name, e.shape, e.byte_offset);
    }

    let preds = vec![PredictionRecord {
        video_id: "clip_7".into(),
        label: 12,
        t_start: 1.0 / 3.0,
        t_end: 2.5,
        score: 0.875,
    }];
    for name in ["preds.jsonl", "preds.csv"] {
        write_predictions(dir.join(name), &preds)?;
        print!("{name}:\n{}", std::fs::read_to_string(dir.join(name)).expect("written"));
        assert_eq!(read_predictions(dir.join(name))?.len(), 1);
    }

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
