//! Focal and DIoU loss values on a few inputs.
//!
//!     cargo run --example losses

use ama_tal::losses::{diou_loss_1d, sigmoid_focal_loss, LossParams};

fn main() {
    let params = LossParams::default();
    println!("logit  focal(target=1)  focal(target=0)");
    for logit in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        println!(
            "{logit:>5}  {:>15.6}  {:>15.6}",
            sigmoid_focal_loss(logit, true, &params),
            sigmoid_focal_loss(logit, false, &params)
        );
    }
    println!();
    for (pred, gt) in [((0.0, 10.0), (0.0, 10.0)), ((2.0, 12.0), (0.0, 10.0)), ((0.0, 10.0), (10.0, 20.0)), ((0.0, 2.0), (30.0, 31.0))] {
        println!("DIoU {pred:?} vs {gt:?} = {:.4}", diou_loss_1d(pred, gt));
    }
}
