//! One nodal census, with and without local refinement near critical points.

use nodal_lab::measure::uniform_circle;
use nodal_lab::synthesis::{sample_planar, sample_torus, default_torus_size};
use nodal_lab::topology::{count_components, count_components_with, CountOptions};

fn main() -> nodal_lab::Result<()> {
    let m = uniform_circle(64)?;
    let sample = sample_planar(&m, 20.0, 0.05, 5, false)?;
    let refined = count_components(&sample)?;
    let plain = count_components_with(
        &sample,
        &CountOptions {
            refine: None,
            ..Default::default()
        },
    )?;
    println!(
        "refined: {} compact, {} touching the circle, {} + {} domains, {} cells on sub-grids",
        refined.compact_zero_components,
        refined.boundary_zero_components,
        refined.positive_domains,
        refined.negative_domains,
        refined.refined_cells
    );
    println!(
        "coarse:  {} compact, {} touching the circle",
        plain.compact_zero_components, plain.boundary_zero_components
    );

    let torus = sample_torus(25, default_torus_size(25), 5)?;
    let c = count_components(&torus)?;
    println!(
        "torus n = 25: {} contractible, {} wrapping",
        c.compact_zero_components, c.wrapping_zero_components
    );
    Ok(())
}
