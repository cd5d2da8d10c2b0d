//! Lattice points on circles and the search for n whose μₙ is close to a target.

use nodal_lab::lattice::{r2, search_filtered, spectral_measure_mu_n, sum_two_squares_reps};
use nodal_lab::measure::{cilleruelo, uniform_circle, weak_star_distance};

fn main() -> nodal_lab::Result<()> {
    for n in [1, 2, 3, 5, 25, 65, 1885] {
        println!("r2({n}) = {}", r2(n));
    }
    println!("{:?}", sum_two_squares_reps(25).points);

    let uniform = uniform_circle(64)?;
    let mu = spectral_measure_mu_n(1885)?;
    println!("d(mu_1885, uniform64) = {:.4}", weak_star_distance(&mu, &uniform, 4)?);

    // Near-Cilleruelo n up to 5000 with more than the four axis points.
    for hit in search_filtered(&cilleruelo(), 1, 5000, 4, 8, |h| h.r2 > 4)? {
        println!("n = {:>5}  r2 = {:>3}  distance = {:.4}", hit.n, hit.r2, hit.distance);
    }
    Ok(())
}
