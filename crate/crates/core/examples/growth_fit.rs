//! Component counts along n whose μₙ stays close to the Cilleruelo measure.

use nodal_lab::estimation::{cilleruelo_growth_fit, GrowthTarget, SweepFit};
use nodal_lab::lattice::search_filtered;
use nodal_lab::synthesis::default_torus_size;

fn main() -> nodal_lab::Result<()> {
    let target = GrowthTarget::cilleruelo();
    let hits = search_filtered(&target.measure, 50, 1000, target.max_harmonic, usize::MAX, |h| {
        h.distance <= target.max_distance && h.r2 > 4
    })?;
    let mut ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
    ns.sort_unstable();
    let ns: Vec<u64> = ns.iter().step_by((ns.len() / 4).max(1)).copied().collect();
    println!("n: {ns:?}");

    let s = cilleruelo_growth_fit(&ns, default_torus_size, 20, 7, &target)?;
    for p in &s.points {
        println!("n = {:>5}: mean total components {:.2}", p.parameter, p.estimate.mean_total_count());
    }
    if let Some(SweepFit::PowerLaw(fit)) = &s.fit {
        println!("exponent {:.3} ± {:.3}", fit.exponent, fit.exponent_stderr);
    }
    println!("{}", s.label.as_deref().unwrap_or_default());
    Ok(())
}
