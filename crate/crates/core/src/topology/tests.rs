use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::components_oracle;
use super::*;
use crate::measure::{cilleruelo, pair, uniform_circle};
use crate::synthesis::{sample_planar, sample_torus, Jet, TrigSum};

#[derive(Debug)]
struct Paraboloid;

impl ScalarField for Paraboloid {
    fn jet(&self, x: [f64; 2]) -> Jet {
        Jet {
            value: x[0] * x[0] + x[1] * x[1] - 1.0,
            grad: [2.0 * x[0], 2.0 * x[1]],
            hess: [2.0, 0.0, 2.0],
        }
    }
}

/// `a cos(2πx₁ + φ) + b cos(2πx₂ + ψ)` as a trigonometric sum.
fn two_wave(a: f64, phi: f64, b: f64, psi: f64) -> TrigSum {
    TrigSum {
        freqs: vec![[1.0, 0.0], [0.0, 1.0]],
        cos_amp: vec![a * phi.cos(), b * psi.cos()],
        sin_amp: vec![-a * phi.sin(), -b * psi.sin()],
    }
}

fn unrefined() -> CountOptions {
    CountOptions {
        refine: None,
        ..CountOptions::default()
    }
}

fn bilinear_center(g: &Grid) -> impl Fn(usize, usize) -> f64 + '_ {
    move |i, j| 0.25 * (g.get(i, j) + g.get(i + 1, j) + g.get(i + 1, j + 1) + g.get(i, j + 1))
}

#[test]
fn parallel_lines_have_no_compact_component() {
    let f = two_wave(1.0, 0.3, 0.0, 0.0);
    let s = FieldSample::synthetic_planar(3.0, 0.05, Arc::new(f), "cos", false);
    let c = count_components(&s).unwrap();
    assert_eq!(c.compact_zero_components, 0);
    // x₁ = (k/2 + 1/4) - 0.3/2π for |x₁| < 3: 12 lines, each meeting the circle.
    assert_eq!(c.boundary_zero_components, 12);
}

#[test]
fn single_circle() {
    let s = FieldSample::synthetic_planar(3.0, 0.05, Arc::new(Paraboloid), "circle", false);
    let c = count_components(&s).unwrap();
    assert_eq!(c.compact_zero_components, 1);
    assert_eq!(c.boundary_zero_components, 0);
    assert_eq!(c.negative_domains, 1);
    assert_eq!(c.positive_domains, 1);
}

#[test]
fn pair_measure_field_is_lines() {
    for seed in 0..5 {
        let s = sample_planar(&pair(), 6.0, 0.05, seed, false).unwrap();
        let c = count_components(&s).unwrap();
        assert_eq!(c.compact_zero_components, 0);
        assert!(c.boundary_zero_components > 0);
        assert_eq!(c.saddle_cells, 0);
    }
}

#[test]
fn nan_is_a_counting_error() {
    let mut g = Grid::new(3, 3, vec![1.0; 9]);
    g.data[4] = f64::NAN;
    assert!(matches!(count_grid(&g, false, None, &|_, _| 0.0), Err(Error::Counting(_))));
}

#[test]
fn exact_zero_counts_as_positive() {
    let g = Grid::new(3, 3, vec![-1.0, -1.0, -1.0, -1.0, 0.0, -1.0, -1.0, -1.0, -1.0]);
    let c = count_grid(&g, false, None, &|_, _| -1.0).unwrap();
    assert_eq!((c.compact_zero, c.positive_domains, c.negative_domains), (1, 1, 1));
}

#[test]
fn random_sign_grids_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..300 {
        let nx = rng.random_range(2..=12);
        let ny = rng.random_range(2..=12);
        let g = Grid::from_fn(nx, ny, |_, _| rng.random_range(-1.0..1.0));
        let resolve = bilinear_center(&g);
        let fast = count_grid(&g, false, None, &resolve).unwrap();
        let slow = components_oracle(&g, &resolve);
        assert_eq!(fast.compact_zero + fast.boundary_zero, slow.zero_components);
        assert_eq!(fast.compact_zero, slow.compact_zero_components);
        assert_eq!(fast.positive_domains, slow.positive_domains);
        assert_eq!(fast.negative_domains, slow.negative_domains);
    }
}

proptest! {
    #[test]
    fn pure_sign_grids_match_oracle(nx in 2usize..=8, ny in 2usize..=8,
                                    bits in prop::collection::vec(any::<bool>(), 64)) {
        let g = Grid::from_fn(nx, ny, |i, j| if bits[i * 8 + j] { 1.0 } else { -1.0 });
        let resolve = bilinear_center(&g);
        let fast = count_grid(&g, false, None, &resolve).unwrap();
        let slow = components_oracle(&g, &resolve);
        prop_assert_eq!(fast.compact_zero + fast.boundary_zero, slow.zero_components);
        prop_assert_eq!(fast.compact_zero, slow.compact_zero_components);
        prop_assert_eq!(fast.positive_domains, slow.positive_domains);
        prop_assert_eq!(fast.negative_domains, slow.negative_domains);
    }
}

#[test]
fn clipping_is_exact() {
    let m = uniform_circle(64).unwrap();
    let small_r = 6.0;
    for seed in 0..6 {
        let a = sample_planar(&m, small_r, 0.05, seed, false).unwrap();
        let b = sample_planar(&m, small_r + 1.0, 0.05, seed, false).unwrap();
        let ca = count_components_with(&a, &unrefined()).unwrap();
        // Count the larger window on the smaller disk.
        let Domain::PlanarWindow { .. } = b.domain else { unreachable!() };
        let r2 = small_r * small_r;
        let h = b.domain.spacing();
        let x0 = b.domain.coord(0);
        let inside = |s: f64, t: f64| {
            let (x, y) = (x0 + s * h, x0 + t * h);
            x * x + y * y < r2
        };
        let resolve = |i: usize, j: usize| {
            saddle_value(b.field(), [b.domain.coord(i), b.domain.coord(j)], h, SaddleRule::CriticalPoint)
        };
        let cb = count_grid(&b.values, false, Some(&inside), &resolve).unwrap();
        assert_eq!(ca.compact_zero_components, cb.compact_zero);
        assert_eq!(ca.boundary_zero_components, cb.boundary_zero);
        assert_eq!(ca.positive_domains, cb.positive_domains);
        assert_eq!(ca.negative_domains, cb.negative_domains);
    }
}

#[test]
fn zero_components_never_exceed_domains_on_torus() {
    for seed in 0..20 {
        let s = sample_torus(65, 72, seed).unwrap();
        let c = count_components(&s).unwrap();
        assert_eq!(c.boundary_zero_components, 0);
        assert!(c.total_zero_components() <= c.positive_domains + c.negative_domains);
    }
}

#[test]
fn torus_counts_are_rotation_invariant() {
    for seed in 0..10 {
        let s = sample_torus(25, 40, seed).unwrap();
        let base = count_components_with(&s, &unrefined()).unwrap();
        let n = s.values.nx;
        // (i, j) ↦ (-j, i): the grid of x ↦ (−x₂, x₁) composed with f.
        let rotated = Grid::from_fn(n, n, |i, j| s.values.get(j, (n - i) % n));
        let exact = s.field();
        let resolve = |i: usize, j: usize| {
            // Rotated cell (i, j) is the original cell with corners (j, n-i-1).
            let corner = [s.domain.coord(j), s.domain.coord((2 * n - i - 1) % n)];
            saddle_value(exact, corner, 1.0 / n as f64, SaddleRule::CriticalPoint)
        };
        let rot = count_grid(&rotated, true, None, &resolve).unwrap();
        assert_eq!(base.compact_zero_components, rot.compact_zero);
        assert_eq!(base.wrapping_zero_components, rot.wrapping_zero);
        assert_eq!(base.positive_domains, rot.positive_domains);
        assert_eq!(base.negative_domains, rot.negative_domains);
    }
}

#[test]
fn lowest_torus_mode_only_wraps() {
    for seed in 0..50 {
        let s = sample_torus(1, 8, seed).unwrap();
        let c = count_components(&s).unwrap();
        assert_eq!(c.compact_zero_components, 0, "seed {seed}");
        assert_eq!(c.wrapping_zero_components, 2, "seed {seed}");
    }
}

#[test]
fn torus_wrap_detection_on_lines() {
    // f = cos(2π·3x₁) on a 24×24 torus: six vertical circles.
    let g = Grid::from_fn(24, 24, |i, _| (TAU * 3.0 * (i as f64 + 0.5) / 24.0).cos());
    let c = count_grid(&g, true, None, &|_, _| 1.0).unwrap();
    assert_eq!((c.compact_zero, c.wrapping_zero), (0, 6));
    assert_eq!((c.positive_domains, c.negative_domains), (3, 3));
}

fn closed_form_flips(a: f64, phi: f64, b: f64, psi: f64, r: f64) -> u64 {
    let mut count = 0;
    let kmax = (2.0 * r + 4.0) as i64;
    for k in -kmax..=kmax {
        let x1 = (k as f64 * PI - phi) / TAU;
        if x1.abs() >= r {
            continue;
        }
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let c = -a * sign / b;
        let base = c.acos();
        for branch in [base, -base] {
            for m in -kmax..=kmax {
                let x2 = (branch - psi) / TAU + m as f64;
                if x1 * x1 + x2 * x2 < r * r {
                    count += 1;
                }
            }
        }
    }
    count
}

#[test]
fn two_wave_flips_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let b = rng.random_range(0.5..1.5);
        let a = b * rng.random_range(0.05..0.95);
        let (phi, psi) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let r = 6.0;
        let f = two_wave(a, phi, b, psi);
        let s = FieldSample::synthetic_planar(r, 0.05, Arc::new(f), "two-wave", true);
        let flips = count_flips(&s).unwrap();
        assert_eq!(flips.flips, closed_form_flips(a, phi, b, psi, r));
        assert!(flips.degenerate.is_empty());
    }
}

#[test]
fn straight_lines_have_no_flips() {
    let f = two_wave(1.0, 0.4, 0.0, 0.0);
    let s = FieldSample::synthetic_planar(4.0, 0.05, Arc::new(f), "cos", true);
    assert_eq!(count_flips(&s).unwrap().flips, 0);
    let no_grad = FieldSample::synthetic_planar(4.0, 0.05, Arc::new(two_wave(1.0, 0.0, 1.0, 0.0)), "x", false);
    assert!(matches!(count_flips(&no_grad), Err(Error::Precondition(_))));
}

#[test]
fn cilleruelo_samples_have_no_compact_components() {
    for seed in 0..10 {
        let s = sample_planar(&cilleruelo(), 10.0, 0.05, seed, false).unwrap();
        assert_eq!(count_components(&s).unwrap().compact_zero_components, 0);
    }
}

#[test]
fn refining_every_cell_matches_the_fine_grid() {
    for seed in 0..6 {
        let s = sample_torus(25, 40, seed).unwrap();
        let h = s.domain.spacing();
        let k = 4;
        let cells = vec![k; 40 * 40];
        let coord = |i: usize| s.domain.coord(i);
        let resolve = |i: usize, j: usize| saddle_value(s.field(), [coord(i), coord(j)], h, SaddleRule::CriticalPoint);
        let r = Refinement {
            cells: &cells,
            field: s.field(),
            coord: &coord,
            step: h,
            rule: SaddleRule::CriticalPoint,
        };
        let refined = count_grid_refined(&s.values, true, None, &resolve, Some(&r)).unwrap();
        let fine = refine::fine_grid(s.field(), &s.domain, k);
        let hf = h / k as f64;
        let resolve_fine = |i: usize, j: usize| {
            saddle_value(s.field(), [i as f64 * hf, j as f64 * hf], hf, SaddleRule::CriticalPoint)
        };
        let reference = count_grid(&fine, true, None, &resolve_fine).unwrap();
        assert_eq!(refined.compact_zero, reference.compact_zero, "seed {seed}");
        assert_eq!(refined.wrapping_zero, reference.wrapping_zero, "seed {seed}");
        assert_eq!(refined.positive_domains, reference.positive_domains, "seed {seed}");
        assert_eq!(refined.negative_domains, reference.negative_domains, "seed {seed}");
    }
}

#[test]
fn local_refinement_agrees_with_uniform_fine_grid() {
    let k = 8;
    let options = CountOptions {
        refine: Some(refine::RefineOptions { feature_steps: 1.0, subdivisions: k }),
        ..CountOptions::default()
    };
    for seed in 0..8 {
        let s = sample_torus(65, 72, seed).unwrap();
        let c = count_components_with(&s, &options).unwrap();
        let fine = refine::fine_grid(s.field(), &s.domain, k);
        let hf = s.domain.spacing() / k as f64;
        let resolve = |i: usize, j: usize| {
            saddle_value(s.field(), [i as f64 * hf, j as f64 * hf], hf, SaddleRule::CriticalPoint)
        };
        let reference = count_grid(&fine, true, None, &resolve).unwrap();
        assert_eq!(c.compact_zero_components, reference.compact_zero, "seed {seed}");
        assert_eq!(c.wrapping_zero_components, reference.wrapping_zero, "seed {seed}");
    }
}

#[test]
fn planar_compact_count_ignores_the_window() {
    // Compactness is decided against the true disk, so it cannot depend on
    // how far the sampled window extends past it.
    let m = uniform_circle(64).unwrap();
    for seed in 0..6 {
        let a = sample_planar(&m, 6.0, 0.05, seed, false).unwrap();
        let b = sample_planar(&m, 7.0, 0.05, seed, false).unwrap();
        let ca = count_components(&a).unwrap();
        let h = b.domain.spacing();
        let x0 = b.domain.coord(0);
        let inside = |s: f64, t: f64| {
            let (x, y) = (x0 + s * h, x0 + t * h);
            x * x + y * y < 36.0
        };
        let resolve = |i: usize, j: usize| {
            saddle_value(b.field(), [b.domain.coord(i), b.domain.coord(j)], h, SaddleRule::CriticalPoint)
        };
        let cb = count_grid(&b.values, false, Some(&inside), &resolve).unwrap();
        assert_eq!(ca.compact_zero_components, cb.compact_zero);
    }
}

#[test]
fn critical_points_are_true_critical_points() {
    let s = sample_torus(65, 72, 3).unwrap();
    let points = refine::fine_critical_points(&s, 1.0);
    assert!(!points.is_empty());
    for p in &points {
        let jet = s.field().jet(p.x);
        assert!(jet.grad[0].hypot(jet.grad[1]) < 1e-6, "{p:?}");
        assert!(p.feature_size() < s.domain.spacing());
    }
}
