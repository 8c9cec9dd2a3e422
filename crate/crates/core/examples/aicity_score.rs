//! The AI City activity overlap score, with and without counting unmatched
//! predictions.
//!
//!     cargo run --example aicity_score

use ama_tal::io::PredictionRecord;
use ama_tal::metrics::{aicity_overlap_score, AiCityOptions, GroundTruthSegment};

fn main() {
    let gts = vec![
        GroundTruthSegment {
            video_id: "dash_1".into(),
            label: 3,
            start: 0.0,
            end: 10.0,
        },
        GroundTruthSegment {
            video_id: "dash_1".into(),
            label: 7,
            start: 50.0,
            end: 65.0,
        },
    ];
    let pred = |label, t_start, t_end| PredictionRecord {
        video_id: "dash_1".into(),
        label,
        t_start,
        t_end,
        score: 0.9,
    };
    // a good match, one outside the +-10 s window, one spurious
    let preds = vec![pred(3, 2.0, 12.0), pred(7, 80.0, 90.0), pred(9, 100.0, 110.0)];

    let default = aicity_overlap_score(&preds, &gts, &AiCityOptions::default());
    println!("{default:#?}");
    let lenient = AiCityOptions {
        count_unmatched_predictions: false,
        ..AiCityOptions::default()
    };
    println!("ignoring unmatched predictions: {:.4}", aicity_overlap_score(&preds, &gts, &lenient).score);
}
