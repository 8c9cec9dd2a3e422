//! Pushes a unit impulse through the SPPF pooling cascade and prints the
//! support of each branch.
//!
//!     cargo run --example sppf_receptive_field

use ama_tal::model::sppf_pool_cascade;
use ama_tal::numerics::{MaskedSequence, Matrix};

fn main() -> ama_tal::Result<()> {
    let t = 31;
    let mut x = Matrix::zeros(1, t);
    x.set(0, t / 2, 1.0);
    let x = MaskedSequence::full(x);
    let branches = sppf_pool_cascade(&x, 5)?;

    let show = |name: &str, m: &MaskedSequence| {
        let row = m.features().row(0);
        let bar: String = row.iter().map(|&v| if v > 0.0 { '#' } else { '.' }).collect();
        let width = row.iter().filter(|&&v| v > 0.0).count();
        println!("{name:>2} {bar}  width {width}");
    };
    show("x", &x);
    for (i, y) in branches.iter().enumerate() {
        show(&format!("y{}", i + 1), y);
    }
    Ok(())
}
