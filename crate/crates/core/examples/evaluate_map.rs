//! mAP over tIoU thresholds plus precision / recall / F1 on a toy case.
//!
//!     cargo run --example evaluate_map

use ama_tal::io::PredictionRecord;
use ama_tal::metrics::{evaluate, EvalOptions, GroundTruthSegment, Protocol};

fn main() -> ama_tal::Result<()> {
    let gt = |label, start, end| GroundTruthSegment {
        video_id: "cam_0".into(),
        label,
        start,
        end,
    };
    let pred = |label, t_start, t_end, score| PredictionRecord {
        video_id: "cam_0".into(),
        label,
        t_start,
        t_end,
        score,
    };
    let gts = vec![gt(1, 0.0, 10.0), gt(1, 40.0, 52.0), gt(5, 20.0, 28.0)];
    let preds = vec![
        pred(1, 0.5, 9.0, 0.95),
        pred(1, 60.0, 70.0, 0.80),
        pred(1, 43.0, 50.0, 0.70),
        pred(5, 21.0, 30.0, 0.60),
        pred(5, 80.0, 85.0, 0.30),
    ];
    let report = evaluate(&preds, &gts, Protocol::Map, &EvalOptions::default())?;
    print!("{}", report.to_text());
    println!("\n{}", report.to_json());
    Ok(())
}
