//! Estimates along mix(cilleruelo, uniform64, t) and how they fill the interval.

use nodal_lab::estimation::interval_sweep;

fn main() -> nodal_lab::Result<()> {
    let ts = [0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0];
    let (sweep, report) = interval_sweep(&ts, 12.0, 0.05, 30, 5)?;
    for p in &sweep.points {
        println!("t = {:<5} c_hat = {:.4} ± {:.4}", p.parameter, p.estimate.c_hat, p.estimate.stderr);
    }
    for j in sweep.adjacent_jumps() {
        println!("{} → {}: jump {:.4} (combined stderr {:.4})", j.from, j.to, j.jump, j.combined_stderr);
    }
    println!("{report:?}");
    Ok(())
}
