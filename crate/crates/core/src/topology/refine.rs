//! Local re-sampling around near-degenerate critical points.
//!
//! A grid of step `h` can only get the nodal topology wrong where the zero set
//! has structure below the grid scale, that is near a critical point `c` whose
//! value is small compared with its curvature: `2|f(c)| / |λ_min(∇²f(c))| <
//! (ρh)²`. Such points are located from discrete derivatives, polished by
//! Newton's method on the exact field, and the cells around them are traced
//! again on a finer sub-grid of exact values.

use std::f64::consts::TAU;

use crate::synthesis::{Domain, FieldSample, Grid, ScalarField, TrigSum};

/// Feature scale, in grid steps, below which a critical point is refined.
pub const DEFAULT_FEATURE_STEPS: f64 = 1.0;
/// Largest number of sub-cells per cell side in refined cells.
pub const DEFAULT_SUBDIVISIONS: usize = 16;
const MIN_SUBDIVISIONS: usize = 4;
const MAX_PATCH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub feature_steps: f64,
    pub subdivisions: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            feature_steps: DEFAULT_FEATURE_STEPS,
            subdivisions: DEFAULT_SUBDIVISIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x: [f64; 2],
    pub value: f64,
    /// `(∂₁₁, ∂₁₂, ∂₂₂)`.
    pub hess: [f64; 3],
}

impl CriticalPoint {
    /// Eigenvalue of the Hessian with the smaller absolute value.
    pub fn weakest_curvature(&self) -> f64 {
        let [a, b, c] = self.hess;
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let (l1, l2) = (mean - rad, mean + rad);
        if l1.abs() < l2.abs() {
            l1
        } else {
            l2
        }
    }

    /// Size of the sub-level structure: `√(2|f(c)| / |λ_min|)`.
    pub fn feature_size(&self) -> f64 {
        (2.0 * self.value.abs() / self.weakest_curvature().abs()).sqrt()
    }

    pub fn is_saddle(&self) -> bool {
        self.hess[0] * self.hess[2] - self.hess[1] * self.hess[1] < 0.0
    }
}

/// Critical points of the exact field whose zero-level structure is smaller
/// than `feature_steps` grid steps.
pub fn fine_critical_points(sample: &FieldSample, feature_steps: f64) -> Vec<CriticalPoint> {
    let g = &sample.values;
    let domain = sample.domain;
    let periodic = domain.is_periodic();
    let h = domain.spacing();
    let (nx, ny) = (g.nx, g.ny);
    let limit = (feature_steps * h).powi(2);
    let field = sample.field();
    let mut found: Vec<CriticalPoint> = Vec::new();
    let (lo, hi_x, hi_y) = if periodic { (0, nx, ny) } else { (1, nx - 1, ny - 1) };
    let at = |i: isize, j: isize| -> f64 {
        let i = i.rem_euclid(nx as isize) as usize;
        let j = j.rem_euclid(ny as isize) as usize;
        g.get(i, j)
    };
    let data = &g.data;
    for i in lo..hi_x {
        for j in lo..hi_y {
            let v = g.get(i, j);
            // 3×3 stencil, rows along x₁.
            let w: [[f64; 3]; 3] = if i > 0 && j > 0 && i + 1 < nx && j + 1 < ny {
                std::array::from_fn(|a| {
                    let row = (i + a - 1) * ny + j;
                    [data[row - 1], data[row], data[row + 1]]
                })
            } else {
                let (ii, jj) = (i as isize, j as isize);
                std::array::from_fn(|a| std::array::from_fn(|b| at(ii + a as isize - 1, jj + b as isize - 1)))
            };
            let gx = (w[2][1] - w[0][1]) / (2.0 * h);
            let gy = (w[1][2] - w[1][0]) / (2.0 * h);
            let hxx = (w[2][1] - 2.0 * v + w[0][1]) / (h * h);
            let hyy = (w[1][2] - 2.0 * v + w[1][0]) / (h * h);
            let hxy = (w[2][2] - w[2][0] - w[0][2] + w[0][0]) / (4.0 * h * h);
            let det = hxx * hyy - hxy * hxy;
            if det == 0.0 {
                continue;
            }
            let dx = -(hyy * gx - hxy * gy) / det;
            let dy = -(hxx * gy - hxy * gx) / det;
            if dx.abs() > 0.75 * h || dy.abs() > 0.75 * h {
                continue;
            }
            let predicted = CriticalPoint {
                x: [0.0; 2],
                value: v + 0.5 * (gx * dx + gy * dy),
                hess: [hxx, hxy, hyy],
            };
            // Margin for the O(h²) error of the discrete derivatives.
            if predicted.feature_size() > 1.25 * feature_steps * h {
                continue;
            }
            let start = [domain.coord(i) + dx, domain.coord(j) + dy];
            let Some(cp) = newton_critical(field, start, h) else {
                continue;
            };
            if cp.feature_size().powi(2) >= limit {
                continue;
            }
            let cp = if periodic {
                CriticalPoint {
                    x: [cp.x[0].rem_euclid(1.0), cp.x[1].rem_euclid(1.0)],
                    ..cp
                }
            } else {
                cp
            };
            let dup = found.iter().any(|q| {
                let mut d = [(q.x[0] - cp.x[0]).abs(), (q.x[1] - cp.x[1]).abs()];
                if periodic {
                    d = [d[0].min(1.0 - d[0]), d[1].min(1.0 - d[1])];
                }
                d[0] < 1e-3 * h && d[1] < 1e-3 * h
            });
            if !dup {
                found.push(cp);
            }
        }
    }
    found
}

fn newton_critical(field: &dyn ScalarField, mut x: [f64; 2], h: f64) -> Option<CriticalPoint> {
    let start = x;
    for _ in 0..20 {
        let jet = field.jet(x);
        let [a, b, c] = jet.hess;
        let det = a * c - b * b;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = -(c * jet.grad[0] - b * jet.grad[1]) / det;
        let dy = -(a * jet.grad[1] - b * jet.grad[0]) / det;
        x = [x[0] + dx, x[1] + dy];
        if (x[0] - start[0]).abs() > 2.0 * h || (x[1] - start[1]).abs() > 2.0 * h {
            return None;
        }
        if dx.hypot(dy) <= 1e-12 * h {
            let jet = field.jet(x);
            return Some(CriticalPoint {
                x,
                value: jet.value,
                hess: jet.hess,
            });
        }
    }
    None
}

/// Subdivision of each cell (indexed by its lower-left node, `i * ny + j`)
/// around `points`: 0 for cells left alone, otherwise enough sub-cells per
/// side to put about two sub-steps across each feature, at most `max_k`.
pub fn patch_cells(domain: &Domain, nx: usize, ny: usize, points: &[CriticalPoint], max_k: usize) -> Vec<usize> {
    let mut cells = vec![0; nx * ny];
    let h = domain.spacing();
    let periodic = domain.is_periodic();
    let origin = domain.coord(0);
    let (cx, cy) = if periodic { (nx, ny) } else { (nx - 1, ny - 1) };
    for p in points {
        let radius = (p.feature_size() + 0.5 * h).min(MAX_PATCH as f64 * h);
        let wanted = (2.0 * h / p.feature_size()).ceil().min(max_k as f64) as usize;
        let k = wanted.next_power_of_two().clamp(MIN_SUBDIVISIONS.min(max_k), max_k);
        let (u, v) = ((p.x[0] - origin) / h, (p.x[1] - origin) / h);
        let rr = radius / h;
        let (ilo, ihi) = ((u - rr).floor() as isize, (u + rr).floor() as isize);
        let (jlo, jhi) = ((v - rr).floor() as isize, (v + rr).floor() as isize);
        for a in ilo..=ihi {
            for b in jlo..=jhi {
                // Distance from the point to cell [a, a+1] × [b, b+1].
                let dx = (a as f64 - u).max(0.0).max(u - a as f64 - 1.0);
                let dy = (b as f64 - v).max(0.0).max(v - b as f64 - 1.0);
                if dx * dx + dy * dy > rr * rr {
                    continue;
                }
                let (mut a, mut b) = (a, b);
                if periodic {
                    a = a.rem_euclid(cx as isize);
                    b = b.rem_euclid(cy as isize);
                } else if a < 0 || b < 0 || a >= cx as isize || b >= cy as isize {
                    continue;
                }
                let c = &mut cells[a as usize * ny + b as usize];
                *c = (*c).max(k);
            }
        }
    }
    cells
}

/// Exact values at sub-grid points `(coord(i) + a·h/k, coord(j) + b·h/k)`.
/// Trigonometric sums are evaluated in separable form `Σ p_m(x₁) q_m(x₂)`;
/// the factor rows are memoized per sub-grid line and built from the phase
/// at grid line `i` rotated by the phase of `a` sub-steps, so a point shared
/// by two cells gets bit-identical values from both.
pub(crate) struct SubgridValues<'a> {
    field: &'a dyn ScalarField,
    trig: Option<&'a TrigSum>,
    coord: &'a dyn Fn(usize) -> f64,
    step: f64,
    k: usize,
    /// `(cos, sin)` of `2π λ_m · a h/k` per sub-step `a`, for each axis.
    shift: [Vec<Vec<(f64, f64)>>; 2],
    /// Factor rows indexed by `i * k + a`, for each axis.
    rows: [Vec<Option<Box<[f64]>>>; 2],
    /// `(cos, sin)` of `2π λ_m · coord(i)` per grid line, for each axis.
    base: [Vec<Option<Box<[(f64, f64)]>>>; 2],
}

impl<'a> SubgridValues<'a> {
    pub(crate) fn new(
        field: &'a dyn ScalarField,
        coord: &'a dyn Fn(usize) -> f64,
        step: f64,
        k: usize,
    ) -> Self {
        let trig = field.as_trig_sum();
        let shift = std::array::from_fn(|axis| match trig {
            None => Vec::new(),
            Some(t) => (0..k)
                .map(|a| {
                    let d = a as f64 * step / k as f64;
                    t.freqs
                        .iter()
                        .map(|l| {
                            let (s, c) = (TAU * l[axis] * d).sin_cos();
                            (c, s)
                        })
                        .collect()
                })
                .collect(),
        });
        SubgridValues {
            field,
            trig,
            coord,
            step,
            k,
            shift,
            rows: [Vec::new(), Vec::new()],
            base: [Vec::new(), Vec::new()],
        }
    }

    fn position(&self, i: usize, a: usize) -> f64 {
        (self.coord)(i) + a as f64 * self.step / self.k as f64
    }

    fn ensure(&mut self, axis: usize, i: usize, a: usize) {
        let idx = i * self.k + a;
        if self.rows[axis].len() <= idx {
            self.rows[axis].resize(idx + 1, None);
        }
        if self.rows[axis][idx].is_some() {
            return;
        }
        let t = self.trig.expect("trig field");
        if self.base[axis].len() <= i {
            self.base[axis].resize(i + 1, None);
        }
        if self.base[axis][i].is_none() {
            let x = (self.coord)(i);
            let phases: Vec<(f64, f64)> = t
                .freqs
                .iter()
                .map(|l| {
                    let (s, c) = (TAU * l[axis] * x).sin_cos();
                    (c, s)
                })
                .collect();
            self.base[axis][i] = Some(phases.into_boxed_slice());
        }
        let base = self.base[axis][i].as_deref().expect("filled");
        let mut row = Vec::with_capacity(2 * t.len());
        for m in 0..t.len() {
            let (c0, s0) = base[m];
            let (cd, sd) = self.shift[axis][a][m];
            let (c, s) = (c0 * cd - s0 * sd, s0 * cd + c0 * sd);
            if axis == 0 {
                let (ca, sa) = (t.cos_amp[m], t.sin_amp[m]);
                row.push(ca * c + sa * s);
                row.push(sa * c - ca * s);
            } else {
                row.push(c);
                row.push(s);
            }
        }
        self.rows[axis][idx] = Some(row.into_boxed_slice());
    }

    /// Value at sub-point `(a, b)` of the cell whose lower-left node is `(i, j)`,
    /// with `a, b < k` (callers canonicalize).
    pub(crate) fn value(&mut self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        if self.trig.is_none() {
            return self.field.value([self.position(i, a), self.position(j, b)]);
        }
        self.ensure(0, i, a);
        self.ensure(1, j, b);
        let xr = self.rows[0][i * self.k + a].as_deref().expect("ensured");
        let yr = self.rows[1][j * self.k + b].as_deref().expect("ensured");
        dot(xr, yr)
    }

    /// Lower-left corner of sub-cell `(a, b)` of cell `(i, j)`, in the cell's frame.
    pub(crate) fn corner(&self, i: usize, a: usize, j: usize, b: usize) -> [f64; 2] {
        [self.position(i, a), self.position(j, b)]
    }

    pub(crate) fn sub_step(&self) -> f64 {
        self.step / self.k as f64
    }

    pub(crate) fn field(&self) -> &dyn ScalarField {
        self.field
    }
}

/// Fixed-order dot product with independent lanes (vectorizes).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Helper for tests: a grid sampled at `h / k` from an exact field.
pub fn fine_grid(field: &dyn ScalarField, domain: &Domain, k: usize) -> Grid {
    let n = domain.nodes_per_axis();
    let h = domain.spacing() / k as f64;
    let m = if domain.is_periodic() { n * k } else { (n - 1) * k + 1 };
    let x0 = domain.coord(0);
    let axis: Vec<f64> = (0..m).map(|i| x0 + i as f64 * h).collect();
    match field.as_trig_sum() {
        Some(t) => t.grid(&axis, &axis),
        None => Grid::from_fn(m, m, |i, j| field.value([axis[i], axis[j]])),
    }
}
