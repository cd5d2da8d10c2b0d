//! Planar sampling, checked against the exact covariance.

use nodal_lab::measure::uniform_circle;
use nodal_lab::synthesis::{covariance_probe, sample_planar};

fn main() -> nodal_lab::Result<()> {
    let m = uniform_circle(64)?;
    let sample = sample_planar(&m, 5.0, 0.05, 1, false)?;
    println!(
        "{} nodes per axis, max |f| = {:.3}",
        sample.domain.nodes_per_axis(),
        sample.values.max_abs()
    );

    let lags = [[0.0, 0.0], [0.1, 0.0], [0.25, 0.0], [0.3, 0.4], [1.0, 1.0]];
    let probe = covariance_probe(&m, &lags, 4000, 2)?;
    println!("{:>12} {:>10} {:>10} {:>8}", "lag", "exact", "empirical", "stderr");
    for k in 0..lags.len() {
        println!(
            "{:>12?} {:>10.4} {:>10.4} {:>8.4}",
            probe.lags[k], probe.theoretical[k], probe.empirical[k], probe.stderr[k]
        );
    }
    Ok(())
}
