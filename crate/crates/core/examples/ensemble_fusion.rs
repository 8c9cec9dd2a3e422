//! Fusing the detections of three models by plain and score-weighted
//! averaging of their boundaries.
//!
//!     cargo run --example ensemble_fusion

use ama_tal::ensemble::{ensemble, FusionMode, SourcedPrediction};
use ama_tal::io::PredictionRecord;

fn main() {
    let p = |source, label, t_start, t_end, score| SourcedPrediction {
        source,
        pred: PredictionRecord {
            video_id: "rear_3".into(),
            label,
            t_start,
            t_end,
            score,
        },
    };
    let preds = vec![
        p(0, 4, 12.0, 20.0, 0.91),
        p(0, 4, 40.0, 44.0, 0.55),
        p(1, 4, 13.0, 22.0, 0.64),
        p(2, 4, 11.0, 19.5, 0.80),
        p(2, 8, 70.0, 81.0, 0.72),
    ];
    for mode in [FusionMode::Mean, FusionMode::Weighted] {
        println!("{mode:?}");
        for f in ensemble(&preds, mode) {
            println!("  label {} [{:.3}, {:.3}] score {:.2}", f.label, f.t_start, f.t_end, f.score);
        }
    }
}
