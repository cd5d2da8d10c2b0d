//! The planar estimator for a few measures.

use nodal_lab::estimation::estimate_cns_planar;
use nodal_lab::measure::{cilleruelo, pair, tilted_cilleruelo, uniform_circle};

fn main() -> nodal_lab::Result<()> {
    let measures = [pair(), cilleruelo(), tilted_cilleruelo(), uniform_circle(16)?, uniform_circle(64)?];
    for m in &measures {
        let e = estimate_cns_planar(m, 15.0, 0.05, 40, 1)?;
        println!(
            "{:<18} c_hat = {:.4} ± {:.4}  boundary per R = {:.3}{}",
            m.label(),
            e.c_hat,
            e.stderr,
            e.boundary_rate,
            if e.degenerate_measure { "  (degenerate)" } else { "" }
        );
    }
    Ok(())
}
