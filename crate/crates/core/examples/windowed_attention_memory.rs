//! Local-window self-attention, with and without memory rows cached from a
//! previous segment.
//!
//!     cargo run --example windowed_attention_memory

use ama_tal::numerics::{windowed_attention, windowed_attention_weights, KeyRef, MaskedSequence, Matrix};

fn main() -> ama_tal::Result<()> {
    let (d, t) = (4, 12);
    let x = MaskedSequence::full(Matrix::from_fn(d, t, |c, s| ((c * 5 + s * 3) % 7) as f32 / 3.0 - 1.0));
    // Memory: the last three steps of a previous segment, as rows.
    let memory = Matrix::from_fn(3, d, |r, c| ((r + c) % 3) as f32 - 1.0);

    let plain = windowed_attention(&x, 5, None)?;
    let with_memory = windowed_attention(&x, 5, Some(&memory))?;
    println!("step  plain[0]  with memory[0]");
    for s in 0..t {
        println!("{s:>4}  {:>8.4}  {:>14.4}", plain.features().get(0, s), with_memory.features().get(0, s));
    }

    let weights = windowed_attention_weights(&x, 5, Some(&memory))?;
    println!("\nkeys seen by step 0:");
    for (key, w) in &weights.rows[0] {
        let name = match key {
            KeyRef::Memory(i) => format!("memory {i}"),
            KeyRef::Step(s) => format!("step {s}"),
        };
        println!("  {name:<10} {w:.4}");
    }
    println!("row sum {:.6}", weights.row_sum(0));
    Ok(())
}
