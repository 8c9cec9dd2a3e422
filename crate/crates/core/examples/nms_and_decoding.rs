//! Boundary decoding, per-class NMS and the grid-to-seconds conversion.
//!
//!     cargo run --example nms_and_decoding

use ama_tal::model::Point;
use ama_tal::postprocess::{decode_segments, grid_to_seconds, nms_multiclass, Candidate};

fn main() {
    let cand = |t: f32, stride: f32, ol: f32, or: f32, class: usize, score: f64| Candidate {
        level: 0,
        index: 0,
        class,
        score,
        point: Point {
            t,
            range_left: 0.0,
            range_right: 10000.0,
            stride,
        },
        offset_left: ol,
        offset_right: or,
    };
    let candidates = [
        cand(100.0, 4.0, 2.0, 3.0, 0, 0.92),
        cand(101.0, 1.0, 8.0, 10.0, 0, 0.81),
        cand(104.0, 4.0, 1.0, 1.0, 0, 0.64),
        cand(100.0, 4.0, 2.0, 3.0, 5, 0.55),
    ];
    let segs = decode_segments(&candidates, 1000);
    println!("decoded:");
    for s in &segs {
        println!("  label {} [{:.1}, {:.1}] score {:.2}", s.label, s.left, s.right, s.score);
    }
    println!("after NMS (tIoU > 0.5 suppressed):");
    for s in nms_multiclass(&segs, 0.5) {
        let start = grid_to_seconds(s.left, 16, 16, 30.0);
        let end = grid_to_seconds(s.right, 16, 16, 30.0);
        println!("  label {} [{:.1}, {:.1}] -> {start:.6} s to {end:.6} s", s.label, s.left, s.right);
    }
}
