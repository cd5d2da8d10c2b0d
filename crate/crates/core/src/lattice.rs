//! Lattice points on the circles `a² + b² = n` and the angular measures `μₙ`
//! they induce.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{weak_star_distance, Atom, SpectralMeasure};

/// All `λ ∈ ℤ²` with `‖λ‖² = n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSolutionSet {
    pub n: u64,
    pub points: Vec<[i64; 2]>,
}

impl LatticeSolutionSet {
    pub fn r2(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Exact enumeration by scanning `a ∈ [0, ⌊√n⌋]` and testing `n - a²` for
/// squareness, then closing under sign changes and the swap.
pub fn sum_two_squares_reps(n: u64) -> LatticeSolutionSet {
    let mut points = BTreeSet::new();
    for a in 0..=n.isqrt() {
        let rest = n - a * a;
        let b = rest.isqrt();
        if b * b != rest {
            continue;
        }
        let (a, b) = (a as i64, b as i64);
        for (x, y) in [(a, b), (b, a)] {
            for sx in [-1, 1] {
                for sy in [-1, 1] {
                    points.insert([sx * x, sy * y]);
                }
            }
        }
    }
    LatticeSolutionSet {
        n,
        points: points.into_iter().collect(),
    }
}

/// Number of ordered signed representations `n = a² + b²`.
pub fn r2(n: u64) -> usize {
    sum_two_squares_reps(n).r2()
}

/// Membership in the set of sums of two squares.
pub fn in_s(n: u64) -> bool {
    n >= 1 && r2(n) > 0
}

/// `μₙ = r₂(n)⁻¹ Σ δ_{λ/√n}` over the lattice points on the circle of radius √n.
pub fn spectral_measure_mu_n(n: u64) -> Result<SpectralMeasure> {
    let reps = sum_two_squares_reps(n);
    if n == 0 || reps.is_empty() {
        return Err(Error::EmptyEigenspace(n));
    }
    let w = 1.0 / reps.r2() as f64;
    let scale = (n as f64).sqrt();
    SpectralMeasure::new(
        format!("mu_n:{n}"),
        reps.points
            .iter()
            .map(|&[a, b]| Atom::new(a as f64 / scale, b as f64 / scale, w)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub n: u64,
    pub r2: usize,
    pub distance: f64,
}

/// The `top_k` values `n ≤ n_max` in S whose `μₙ` is closest to `target` in
/// [`weak_star_distance`] with `max_harmonic` harmonics. Ties go to smaller `n`.
pub fn search_by_angular_target(
    target: &SpectralMeasure,
    n_max: u64,
    max_harmonic: u32,
    top_k: usize,
) -> Result<Vec<SearchHit>> {
    search_filtered(target, 1, n_max, max_harmonic, top_k, |_| true)
}

/// [`search_by_angular_target`] restricted to `n ∈ [n_min, n_max]` accepted by `keep`.
pub fn search_filtered(
    target: &SpectralMeasure,
    n_min: u64,
    n_max: u64,
    max_harmonic: u32,
    top_k: usize,
    keep: impl Fn(&SearchHit) -> bool + Sync,
) -> Result<Vec<SearchHit>> {
    if !target.is_angular() {
        // Surface the error before fanning out.
        target.fourier_coefficient(1)?;
    }
    let mut hits: Vec<SearchHit> = (n_min.max(1)..=n_max)
        .into_par_iter()
        .filter_map(|n| {
            let reps = r2(n);
            if reps == 0 {
                return None;
            }
            let mu = spectral_measure_mu_n(n).ok()?;
            let distance = weak_star_distance(&mu, target, max_harmonic).ok()?;
            let hit = SearchHit { n, r2: reps, distance };
            keep(&hit).then_some(hit)
        })
        .collect();
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.n.cmp(&b.n)));
    hits.truncate(top_k);
    Ok(hits)
}

/// CSV with header `n,r2,distance`, rows in the given order.
pub fn write_search_csv<W: Write>(mut out: W, hits: &[SearchHit]) -> std::io::Result<()> {
    writeln!(out, "n,r2,distance")?;
    for h in hits {
        writeln!(out, "{},{},{}", h.n, h.r2, h.distance)?;
    }
    Ok(())
}
