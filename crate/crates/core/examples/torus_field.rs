//! Arithmetic random waves on the torus, sampled by FFT.

use nodal_lab::lattice::r2;
use nodal_lab::synthesis::{default_torus_size, sample_torus};

fn main() -> nodal_lab::Result<()> {
    for n in [1, 2, 25, 65, 1885, 5000] {
        println!("n = {n:>5}  r2 = {:>3}  N = {}", r2(n), default_torus_size(n));
    }
    let n = 65;
    let sample = sample_torus(n, default_torus_size(n), 3)?;
    let v = &sample.values;
    let mean_sq = v.data.iter().map(|x| x * x).sum::<f64>() / v.data.len() as f64;
    // Unit variance in expectation.
    println!("n = {n}: grid mean of f² = {mean_sq:.3}, max |f| = {:.3}", v.max_abs());
    Ok(())
}
