//! Measures sharing the fourth Fourier coefficient, compared by their estimates.

use std::f64::consts::PI;

use nodal_lab::estimation::fourier_dependence_scan;
use nodal_lab::measure::{cilleruelo, mix, symmetric_orbit, tilted_cilleruelo, uniform_circle};

fn main() -> nodal_lab::Result<()> {
    let uniform = uniform_circle(64)?;
    // All three have μ̂(4) = 0.
    let half = mix(&cilleruelo(), &tilted_cilleruelo(), 0.5)?;
    let orbit = symmetric_orbit(PI / 8.0);
    let pairs = vec![
        (uniform.clone(), orbit.clone()),
        (uniform, half.clone()),
        (orbit, half),
        (cilleruelo(), tilted_cilleruelo()),
    ];
    for r in fourier_dependence_scan(&pairs, 12.0, 0.05, 30, 6, false)? {
        println!(
            "{} vs {}: μ̂(4) = {:+.3}, {:.4} vs {:.4}, flagged = {}",
            r.a, r.b, r.coefficient4, r.c_hat_a, r.c_hat_b, r.flagged
        );
    }
    Ok(())
}
