//! Points where `f = ∂₁f = 0` ("flips") inside the counting disk.

use log::debug;

use super::{is_positive, saddle_value, SaddleRule};
use crate::error::{Error, Result};
use crate::synthesis::{Domain, FieldSample, ScalarField};

/// Acceptance thresholds for a refined flip.
const RESIDUAL_TOL: f64 = 1e-9;
const JACOBIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FlipCount {
    pub flips: u64,
    /// Accepted points, sorted.
    pub points: Vec<[f64; 2]>,
    /// Candidates rejected as non-transversal or not converged.
    pub degenerate: Vec<[f64; 2]>,
}

/// Counts transversal common zeros of `f` and `∂₁f` in `B(0, R)`.
///
/// Cells crossed by the zero set are scanned; on each zero-set arc through a
/// cell, a sign change of `∂₁f` between the arc end points is bisected and
/// then polished by Newton's method on `(f, ∂₁f)`.
pub fn count_flips(sample: &FieldSample) -> Result<FlipCount> {
    let Domain::PlanarWindow { radius, step, .. } = sample.domain else {
        return Err(Error::Precondition(
            "flip counting needs a planar sample".into(),
        ));
    };
    let Some(g) = sample.grad1.as_ref() else {
        return Err(Error::Precondition(
            "flip counting needs gradient grids".into(),
        ));
    };
    let f = &sample.values;
    let field = sample.field();
    let lipschitz = field.partial1_gradient_bound();
    let reach = step * std::f64::consts::FRAC_1_SQRT_2;
    let n = f.nx;
    let r2 = radius * radius;

    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut degenerate = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let xs = corners.map(|(a, b)| sample.node(a, b));
            // Skip cells entirely outside the disk.
            let nearest = xs
                .iter()
                .map(|p| p[0] * p[0] + p[1] * p[1])
                .fold(f64::INFINITY, f64::min);
            if nearest.sqrt() > radius + 2.0 * step {
                continue;
            }
            let s = corners.map(|(a, b)| is_positive(f.get(a, b)));
            if s.iter().all(|&v| v == s[0]) {
                continue;
            }
            let gv = corners.map(|(a, b)| g.get(a, b));
            let g_changes = gv.iter().any(|&v| (v > 0.0) != (gv[0] > 0.0));
            if !g_changes {
                if let Some(l) = lipschitz {
                    let min_abs = gv.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
                    if min_abs > l * reach {
                        continue;
                    }
                }
            }
            for (p, q) in cell_arcs(field, &xs, &s, step) {
                let gp = field.jet(p).grad[0];
                let gq = field.jet(q).grad[0];
                if (gp > 0.0) == (gq > 0.0) {
                    continue;
                }
                let start = bisect_segment(field, p, q, gp);
                match polish(field, start) {
                    Some(x) if near_cell(x, xs[0], step) => points.push(x),
                    Some(_) => {}
                    None => {
                        debug!("event=degenerate_flip x={} y={}", start[0], start[1]);
                        degenerate.push(start);
                    }
                }
            }
        }
    }

    points.retain(|p| p[0] * p[0] + p[1] * p[1] < r2);
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut unique: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        let dup = unique
            .iter()
            .rev()
            .take_while(|q| p[0] - q[0] < 1e-7)
            .any(|q| (p[1] - q[1]).abs() < 1e-7);
        if !dup {
            unique.push(p);
        }
    }
    Ok(FlipCount {
        flips: unique.len() as u64,
        points: unique,
        degenerate,
    })
}

/// Refined point must stay within one cell of where it was found.
fn near_cell(x: [f64; 2], corner: [f64; 2], h: f64) -> bool {
    x[0] >= corner[0] - h && x[0] <= corner[0] + 2.0 * h && x[1] >= corner[1] - h && x[1] <= corner[1] + 2.0 * h
}

/// Zero crossing of `f` on the segment `a → b` (signs differ at the ends).
fn edge_root(field: &dyn ScalarField, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let fa = field.value(a);
    let pa = is_positive(fa);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let x = lerp(a, b, mid);
        if is_positive(field.value(x)) == pa {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    lerp(a, b, 0.5 * (lo + hi))
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Straight-segment approximations of the zero-set arcs crossing one cell,
/// paired with the same rule as the component census.
fn cell_arcs(
    field: &dyn ScalarField,
    xs: &[[f64; 2]; 4],
    s: &[bool; 4],
    h: f64,
) -> Vec<([f64; 2], [f64; 2])> {
    let pairs = [(0, 1), (1, 2), (3, 2), (0, 3)];
    let crossing: Vec<Option<[f64; 2]>> = pairs
        .iter()
        .map(|&(a, b)| (s[a] != s[b]).then(|| edge_root(field, xs[a], xs[b])))
        .collect();
    let hits: Vec<usize> = (0..4).filter(|&k| crossing[k].is_some()).collect();
    let pt = |k: usize| crossing[k].expect("crossing present");
    match hits.len() {
        2 => vec![(pt(hits[0]), pt(hits[1]))],
        4 => {
            let c = saddle_value(field, xs[0], h, SaddleRule::CriticalPoint);
            if is_positive(c) == s[0] {
                vec![(pt(0), pt(1)), (pt(2), pt(3))]
            } else {
                vec![(pt(0), pt(3)), (pt(1), pt(2))]
            }
        }
        _ => Vec::new(),
    }
}

/// Bisection for the sign change of `∂₁f` along the segment `p → q`.
fn bisect_segment(field: &dyn ScalarField, p: [f64; 2], q: [f64; 2], gp: f64) -> [f64; 2] {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let gm = field.jet(lerp(p, q, mid)).grad[0];
        if (gm > 0.0) == (gp > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lerp(p, q, 0.5 * (lo + hi))
}

/// Newton's method on `(f, ∂₁f)`; `None` unless the limit is a transversal zero.
fn polish(field: &dyn ScalarField, mut x: [f64; 2]) -> Option<[f64; 2]> {
    for _ in 0..30 {
        let jet = field.jet(x);
        let (f, g) = (jet.value, jet.grad[0]);
        // Jacobian rows: ∇f = (f₁, f₂), ∇∂₁f = (f₁₁, f₁₂).
        let (a, b, c, d) = (jet.grad[0], jet.grad[1], jet.hess[0], jet.hess[1]);
        let det = a * d - b * c;
        if f.abs() < 1e-13 && g.abs() < 1e-11 {
            return (det.abs() > JACOBIAN_TOL).then_some(x);
        }
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (d * f - b * g) / det;
        let dy = (a * g - c * f) / det;
        x = [x[0] - dx, x[1] - dy];
    }
    let jet = field.jet(x);
    let det = jet.grad[0] * jet.hess[1] - jet.grad[1] * jet.hess[0];
    (jet.value.abs() < RESIDUAL_TOL && jet.grad[0].abs() < RESIDUAL_TOL && det.abs() > JACOBIAN_TOL)
        .then_some(x)
}
