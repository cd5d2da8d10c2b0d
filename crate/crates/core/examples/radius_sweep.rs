//! Mean counts across radii and the fit E[N] = c·R² + b·R.

use nodal_lab::estimation::{sweep_r, SweepFit};
use nodal_lab::measure::uniform_circle;

fn main() -> nodal_lab::Result<()> {
    let s = sweep_r(&uniform_circle(64)?, &[5.0, 10.0, 15.0, 20.0], 0.05, 30, 4)?;
    for p in &s.points {
        println!("R = {:>4}: mean count {:.2}", p.parameter, p.estimate.mean_count);
    }
    if let Some(SweepFit::Remainder(fit)) = &s.fit {
        println!("c = {:.4} ± {:.4}, b = {:.3} ± {:.3}", fit.c, fit.c_stderr, fit.b, fit.b_stderr);
        println!("largest residual: {:.2} stderr", fit.max_residual_sigma());
    }
    s.write_csv(std::io::stdout())?;
    Ok(())
}
