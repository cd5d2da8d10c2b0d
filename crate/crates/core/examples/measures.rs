//! Builtin spectral measures, mixtures and their angular Fourier coefficients.

use nodal_lab::measure::{cilleruelo, mix, symmetric_orbit, tilted_cilleruelo, uniform_circle, weak_star_distance};

fn main() -> nodal_lab::Result<()> {
    let uniform = uniform_circle(64)?;
    let measures = [
        cilleruelo(),
        tilted_cilleruelo(),
        symmetric_orbit(std::f64::consts::PI / 8.0),
        mix(&cilleruelo(), &uniform, 0.3)?,
        uniform.clone(),
    ];
    println!("{:<40} {:>6} {:>9} {:>9} {:>9}", "measure", "atoms", "re μ̂(4)", "re μ̂(8)", "d(·, U)");
    for m in &measures {
        println!(
            "{:<40} {:>6} {:>9.4} {:>9.4} {:>9.4}",
            m.label(),
            m.len(),
            m.fourier_coefficient(4)?.re,
            m.fourier_coefficient(8)?.re,
            weak_star_distance(m, &uniform, 8)?
        );
    }
    println!("collinear: pair = {}", nodal_lab::measure::pair().is_collinear());
    println!("{}", serde_json::to_string(&cilleruelo()).expect("serializable"));
    Ok(())
}
