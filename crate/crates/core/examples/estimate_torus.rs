//! The toral estimator next to the planar estimate for the same angular measure.

use nodal_lab::estimation::{estimate_cns_planar, estimate_cns_torus};
use nodal_lab::lattice::spectral_measure_mu_n;
use nodal_lab::synthesis::default_torus_size;

fn main() -> nodal_lab::Result<()> {
    for n in [65u64, 325] {
        let torus = estimate_cns_torus(n, default_torus_size(n), 40, 2)?;
        let planar = estimate_cns_planar(&spectral_measure_mu_n(n)?, (n as f64).sqrt(), 0.05, 40, 3)?;
        println!(
            "n = {n}: torus {:.4} ± {:.4} (wrapping {:.2} per trial), plane {:.4} ± {:.4}",
            torus.c_hat, torus.stderr, torus.boundary_rate, planar.c_hat, planar.stderr
        );
    }
    Ok(())
}
