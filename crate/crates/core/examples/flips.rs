//! Sign changes of ∂₁f along the nodal lines, for measures near the Cilleruelo one.

use nodal_lab::measure::{cilleruelo, mix, uniform_circle};
use nodal_lab::synthesis::sample_planar;
use nodal_lab::topology::count_flips;

fn main() -> nodal_lab::Result<()> {
    let uniform = uniform_circle(64)?;
    for t in [0.0, 0.05, 0.2, 1.0] {
        let m = mix(&cilleruelo(), &uniform, t)?;
        let mut counts = Vec::new();
        for seed in 0..8 {
            let sample = sample_planar(&m, 10.0, 0.05, seed, true)?;
            counts.push(count_flips(&sample)?.flips);
        }
        // Near t = 0 a sample has flips only when its x₂ wave dominates.
        println!("t = {t:<5} flips per sample: {counts:?}");
    }
    Ok(())
}
