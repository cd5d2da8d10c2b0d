//! Census of nodal components, nodal domains and flips on sampled grids.
//!
//! The zero set is traced with marching squares: every grid edge whose end
//! points carry opposite signs holds one crossing, and crossings bounding the
//! same cell are joined according to the cell configuration. Ambiguous
//! (saddle) cells are decided by the sign of the exact field at its critical
//! point inside the cell, falling back to the cell centre. Components are
//! merged with a union-find over the crossing edges; on the torus the
//! union-find also tracks period shifts so that non-contractible components
//! are recognised.

mod flips;
pub mod oracle;
pub mod refine;
pub mod union_find;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::{Domain, FieldSample, Grid, ScalarField};
use refine::{fine_critical_points, patch_cells, RefineOptions, SubgridValues};
use union_find::{DisjointSet, PeriodicDisjointSet};

pub use flips::{count_flips, FlipCount};

/// Values with `|f| < ZERO_NUDGE` count as positive.
pub const ZERO_NUDGE: f64 = 1e-13;

#[inline]
pub fn is_positive(v: f64) -> bool {
    v > -ZERO_NUDGE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountRegion {
    Ball { radius: f64 },
    Torus,
    /// The whole sampled rectangle (synthetic grids).
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCount {
    /// Zero-set components that stay inside the counting region. On the torus:
    /// the contractible components.
    pub compact_zero_components: u64,
    /// Components meeting the boundary of the counting region (planar only).
    pub boundary_zero_components: u64,
    /// Non-contractible components on the torus.
    pub wrapping_zero_components: u64,
    pub positive_domains: u64,
    pub negative_domains: u64,
    pub flips: Option<u64>,
    pub region: CountRegion,
    /// Number of ambiguous cells resolved with the exact field.
    pub saddle_cells: u64,
    /// Cells traced on a sub-grid.
    pub refined_cells: u64,
    /// Critical points that triggered refinement.
    pub critical_points: u64,
}

impl ComponentCount {
    /// Every zero-set component of the region.
    pub fn total_zero_components(&self) -> u64 {
        self.compact_zero_components + self.boundary_zero_components + self.wrapping_zero_components
    }
}

/// How ambiguous cells are decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaddleRule {
    /// Sign of the field at the cell centre.
    Center,
    /// Sign of the field at the saddle point inside the cell, located by
    /// Newton iteration on the gradient; centre value if none is found.
    #[default]
    CriticalPoint,
}

/// Raw output of [`count_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GridCount {
    pub compact_zero: u64,
    pub boundary_zero: u64,
    pub wrapping_zero: u64,
    pub positive_domains: u64,
    pub negative_domains: u64,
    pub saddle_cells: u64,
    pub refined_cells: u64,
}

/// Census settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    pub saddle_rule: SaddleRule,
    /// Local sub-grid tracing near critical points with small values;
    /// `None` counts on the sampled grid alone.
    pub refine: Option<RefineOptions>,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            saddle_rule: SaddleRule::default(),
            refine: Some(RefineOptions::default()),
        }
    }
}

/// Counts nodal components and domains of a sampled field on its natural region:
/// the inscribed disk `B(0, R)` for planar windows, the whole torus otherwise.
pub fn count_components(field: &FieldSample) -> Result<ComponentCount> {
    count_components_with(field, &CountOptions::default())
}

pub fn count_components_with(field: &FieldSample, options: &CountOptions) -> Result<ComponentCount> {
    let domain = field.domain;
    let h = domain.spacing();
    let exact = field.field();
    let rule = options.saddle_rule;
    let resolve = |i: usize, j: usize| {
        let corner = [domain.coord(i), domain.coord(j)];
        saddle_value(exact, corner, h, rule)
    };
    let (nx, ny) = (field.values.nx, field.values.ny);
    let coord = |i: usize| domain.coord(i);
    let mut critical_points = 0;
    let cells = options.refine.map(|r| {
        let points = fine_critical_points(field, r.feature_steps);
        critical_points = points.len() as u64;
        patch_cells(&domain, nx, ny, &points, r.subdivisions)
    });
    let refinement = cells.as_ref().map(|cells| Refinement {
        cells,
        field: exact,
        coord: &coord,
        step: h,
        rule,
    });
    let (grid, region) = match domain {
        Domain::PlanarWindow { radius, .. } => {
            let r2 = radius * radius;
            let (x0, h) = (domain.coord(0), domain.spacing());
            let inside = |s: f64, t: f64| {
                let (x, y) = (x0 + s * h, x0 + t * h);
                x * x + y * y < r2
            };
            let g = count_grid_refined(&field.values, false, Some(&inside), &resolve, refinement.as_ref())?;
            (g, CountRegion::Ball { radius })
        }
        Domain::Torus { .. } => (
            count_grid_refined(&field.values, true, None, &resolve, refinement.as_ref())?,
            CountRegion::Torus,
        ),
    };
    Ok(ComponentCount {
        compact_zero_components: grid.compact_zero,
        boundary_zero_components: grid.boundary_zero,
        wrapping_zero_components: grid.wrapping_zero,
        positive_domains: grid.positive_domains,
        negative_domains: grid.negative_domains,
        flips: None,
        region,
        saddle_cells: grid.saddle_cells,
        refined_cells: grid.refined_cells,
        critical_points,
    })
}

/// Value deciding an ambiguous cell with lower-left corner `corner` and side `h`.
pub fn saddle_value(field: &dyn ScalarField, corner: [f64; 2], h: f64, rule: SaddleRule) -> f64 {
    let center = [corner[0] + 0.5 * h, corner[1] + 0.5 * h];
    if rule == SaddleRule::Center {
        return field.value(center);
    }
    let mut x = center;
    for _ in 0..12 {
        let jet = field.jet(x);
        let [a, b, c] = jet.hess;
        let det = a * c - b * b;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = -(c * jet.grad[0] - b * jet.grad[1]) / det;
        let dy = -(a * jet.grad[1] - b * jet.grad[0]) / det;
        x = [x[0] + dx, x[1] + dy];
        let inside = x[0] >= corner[0] - 1e-9 * h
            && x[0] <= corner[0] + h * (1.0 + 1e-9)
            && x[1] >= corner[1] - 1e-9 * h
            && x[1] <= corner[1] + h * (1.0 + 1e-9);
        if !inside {
            break;
        }
        if dx.hypot(dy) <= 1e-12 * h {
            let jet = field.jet(x);
            let [a, b, c] = jet.hess;
            if a * c - b * b < 0.0 {
                return jet.value;
            }
            break;
        }
    }
    field.value(center)
}

/// Marching-squares census of a grid.
///
/// * `periodic`: wrap both axes (torus). All components are then counted, split
///   into contractible and wrapping ones.
/// * `inside`: counting region, as a predicate on fractional grid indices
///   `(i + s, j + t)`. The zero set is traced over the whole grid; a component
///   is compact when all its edge crossings lie in the region, a boundary
///   component when some do and some do not, and ignored when none do. Nodal
///   domains are counted over the cells whose four corners lie in the region.
///   `None` means the whole grid, with components reaching the grid border
///   counted as boundary components.
/// * `resolve(i, j)`: value whose sign decides the saddle cell with lower-left
///   node `(i, j)`; the two corners sharing that sign are joined through the cell.
pub fn count_grid(
    values: &Grid,
    periodic: bool,
    inside: Option<&dyn Fn(f64, f64) -> bool>,
    resolve: &dyn Fn(usize, usize) -> f64,
) -> Result<GridCount> {
    count_grid_refined(values, periodic, inside, resolve, None)
}

/// Cells traced again on a sub-grid of exact field values.
pub struct Refinement<'a> {
    /// Sub-cells per side for each cell, indexed by its lower-left node
    /// `i * ny + j`; 0 leaves the cell unrefined.
    pub cells: &'a [usize],
    pub field: &'a dyn ScalarField,
    /// Grid coordinate of index `i` along either axis.
    pub coord: &'a dyn Fn(usize) -> f64,
    pub step: f64,
    pub rule: SaddleRule,
}

/// [`count_grid`] with the flagged cells of `refine` traced on a finer sub-grid.
///
/// A grid edge between two cells refined alike is sampled at the sub-grid
/// points (so it may carry several crossings); any other edge keeps the
/// linear profile between its end points so both sides agree.
pub fn count_grid_refined(
    values: &Grid,
    periodic: bool,
    inside: Option<&dyn Fn(f64, f64) -> bool>,
    resolve: &dyn Fn(usize, usize) -> f64,
    refine: Option<&Refinement>,
) -> Result<GridCount> {
    let (nx, ny) = (values.nx, values.ny);
    if nx < 2 || ny < 2 {
        return Err(Error::Counting(format!("grid {nx}×{ny} has no cells")));
    }
    if let Some(bad) = values.data.iter().find(|v| !v.is_finite()) {
        return Err(Error::Counting(format!("grid holds non-finite value {bad}")));
    }
    let node_in: Option<Vec<bool>> = inside.map(|f| {
        let mut v = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                v.push(f(i as f64, j as f64));
            }
        }
        v
    });
    // A cell is in the region when its four corners are.
    let cell_in = node_in.as_ref().map(|v| {
        let mut c = vec![false; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let (i1, j1) = ((i + 1) % nx, (j + 1) % ny);
                c[i * ny + j] = v[i * ny + j] && v[i1 * ny + j] && v[i1 * ny + j1] && v[i * ny + j1];
            }
        }
        c
    });
    let mut census = Census {
        nx,
        ny,
        periodic,
        values,
        sign: values.data.iter().map(|&v| is_positive(v)).collect(),
        cell_in,
        inside,
        zero_plain: (!periodic).then(|| DisjointSet::new(2 * nx * ny)),
        zero_periodic: periodic.then(|| PeriodicDisjointSet::new(2 * nx * ny)),
        hits: if periodic { Vec::new() } else { vec![0; 2 * nx * ny] },
        clipped: (inside.is_some() && !periodic).then(|| DisjointSet::new(2 * nx * ny)),
        touching: Vec::new(),
        domains: DisjointSet::new(nx * ny),
        extra_sign: Vec::new(),
        saddle_cells: 0,
        refined_cells: 0,
    };
    let (cx, cy) = census.cell_range();
    // One sub-grid per subdivision level in use.
    let mut levels: Vec<(usize, SubgridValues, SharedIds)> = Vec::new();
    for i in 0..cx {
        for j in 0..cy {
            let k = refine.map_or(0, |r| r.cells[i * ny + j]);
            let Some(r) = refine.filter(|_| k > 0) else {
                census.coarse_cell(i, j, resolve);
                continue;
            };
            let level = match levels.iter().position(|l| l.0 == k) {
                Some(p) => p,
                None => {
                    levels.push((k, SubgridValues::new(r.field, r.coord, r.step, k), SharedIds::default()));
                    levels.len() - 1
                }
            };
            let (_, values, ids) = &mut levels[level];
            census.refined_cell(i, j, k, r, values, ids);
        }
    }
    Ok(census.finish())
}

const HIT_INSIDE: u8 = 1;
const HIT_OUTSIDE: u8 = 2;

/// Labels shared between neighbouring refined cells, keyed canonically.
#[derive(Default)]
struct SharedIds {
    /// Sub-node on a refined grid edge: (node, offset along x₁, offset along x₂).
    nodes: HashMap<(usize, usize, usize), usize>,
    /// Sub-edge on a refined grid edge: (lower sub-node key, direction).
    edges: HashMap<((usize, usize, usize), u8), usize>,
}

struct Census<'g> {
    nx: usize,
    ny: usize,
    periodic: bool,
    values: &'g Grid,
    sign: Vec<bool>,
    cell_in: Option<Vec<bool>>,
    inside: Option<&'g dyn Fn(f64, f64) -> bool>,
    zero_plain: Option<DisjointSet>,
    zero_periodic: Option<PeriodicDisjointSet>,
    /// Where the crossings of each zero-set label lie (planar grids only).
    hits: Vec<u8>,
    /// Zero set traced within the region cells only, for boundary pieces.
    clipped: Option<DisjointSet>,
    /// Labels of clipped crossings on the region boundary.
    touching: Vec<usize>,
    domains: DisjointSet,
    /// Signs of domain labels past the grid nodes (sub-grid nodes).
    extra_sign: Vec<bool>,
    saddle_cells: u64,
    refined_cells: u64,
}

impl Census<'_> {
    fn cell_range(&self) -> (usize, usize) {
        if self.periodic {
            (self.nx, self.ny)
        } else {
            (self.nx - 1, self.ny - 1)
        }
    }

    fn node(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    /// Whether the domains of a cell are counted.
    #[inline]
    fn cell_in(&self, i: usize, j: usize) -> bool {
        self.cell_in.as_ref().is_none_or(|c| c[i * self.ny + j])
    }

    /// The cell with lower-left node `(i, j)`, if the grid has it.
    fn cell_exists(&self, i: isize, j: isize) -> Option<(usize, usize)> {
        let (cx, cy) = self.cell_range();
        if self.periodic {
            return Some((i.rem_euclid(cx as isize) as usize, j.rem_euclid(cy as isize) as usize));
        }
        if i < 0 || j < 0 || i as usize >= cx || j as usize >= cy {
            return None;
        }
        Some((i as usize, j as usize))
    }

    fn join(&mut self, a: usize, sa: [i32; 2], b: usize, sb: [i32; 2]) {
        if let Some(ds) = self.zero_plain.as_mut() {
            ds.union(a, b);
        }
        if let Some(ds) = self.zero_periodic.as_mut() {
            ds.union(a, b, [sb[0] - sa[0], sb[1] - sa[1]]);
        }
    }

    fn new_zero_label(&mut self) -> usize {
        match (self.zero_plain.as_mut(), self.zero_periodic.as_mut()) {
            (Some(ds), _) => {
                self.hits.push(0);
                if let Some(c) = self.clipped.as_mut() {
                    c.grow();
                }
                ds.push()
            }
            (_, Some(ds)) => ds.push(),
            _ => unreachable!("one zero-set forest exists"),
        }
    }

    fn new_domain_label(&mut self, positive: bool) -> usize {
        self.extra_sign.push(positive);
        self.domains.grow()
    }

    /// Records a crossing of label `id` at fractional grid position `p`;
    /// `border` when it lies on the outer edge of a non-periodic grid.
    fn mark(&mut self, id: usize, p: [f64; 2], border: bool) {
        if self.periodic {
            return;
        }
        let inside = self.inside.is_none_or(|f| f(p[0], p[1]));
        let mut flags = if inside { HIT_INSIDE } else { HIT_OUTSIDE };
        if border {
            flags |= HIT_OUTSIDE;
        }
        self.hits[id] |= flags;
    }

    /// Grid edges of cell `(i, j)` (bottom, right, top, left), the period
    /// shifts of their crossings in this cell's frame, and the neighbouring
    /// cells across them.
    fn cell_edges(&self, i: usize, j: usize) -> ([usize; 4], [[i32; 2]; 4], [(isize, isize); 4]) {
        let (i1, j1) = ((i + 1) % self.nx, (j + 1) % self.ny);
        let e1 = |i: usize, j: usize| 2 * (i * self.ny + j);
        let e2 = |i: usize, j: usize| 2 * (i * self.ny + j) + 1;
        let (ii, jj) = (i as isize, j as isize);
        (
            [e1(i, j), e2(i1, j), e1(i, j1), e2(i, j)],
            [[0, 0], [(i1 < i) as i32, 0], [0, (j1 < j) as i32], [0, 0]],
            [(ii, jj - 1), (ii + 1, jj), (ii, jj + 1), (ii - 1, jj)],
        )
    }

    /// Fractional position of the crossing at parameter `t` along side `k` of
    /// cell `(i, j)`, sides running in the directions of the axes.
    fn side_point(i: usize, j: usize, k: usize, t: f64) -> [f64; 2] {
        let (x, y) = (i as f64, j as f64);
        match k {
            0 => [x + t, y],
            1 => [x + 1.0, y + t],
            2 => [x + t, y + 1.0],
            _ => [x, y + t],
        }
    }

    fn coarse_cell(&mut self, i: usize, j: usize, resolve: &dyn Fn(usize, usize) -> f64) {
        let (i1, j1) = ((i + 1) % self.nx, (j + 1) % self.ny);
        let n = [self.node(i, j), self.node(i1, j), self.node(i1, j1), self.node(i, j1)];
        let s = n.map(|x| self.sign[x]);
        let (edges, wrap, neighbours) = self.cell_edges(i, j);
        let crosses = [s[0] != s[1], s[1] != s[2], s[3] != s[2], s[0] != s[3]];
        if !crosses.iter().any(|&c| c) {
            if self.cell_in(i, j) {
                self.marching(n, s, crosses, || true);
            }
            return;
        }
        let decided = std::cell::OnceCell::new();
        let decide = || *decided.get_or_init(|| is_positive(resolve(i, j)));
        if self.cell_in(i, j) {
            self.marching(n, s, crosses, decide);
        }
        if crosses.iter().all(|&c| c) {
            self.saddle_cells += 1;
        }
        let pairs = self.pairing(s, crosses, &decide);
        for (a, b) in pairs.into_iter().flatten() {
            self.join(edges[a], wrap[a], edges[b], wrap[b]);
        }
        self.clip(i, j, pairs, edges, crosses.map(|c| c.then_some(())), neighbours);
        if !self.periodic {
            let v = n.map(|x| self.values.data[x]);
            for (k, &(a, b)) in SIDES.iter().enumerate() {
                if crosses[k] {
                    let t = v[a] / (v[a] - v[b]);
                    let border = self.cell_exists(neighbours[k].0, neighbours[k].1).is_none();
                    self.mark(edges[k], Self::side_point(i, j, k, t), border);
                }
            }
        }
    }

    /// Clipped trace: joins within region cells and records crossings whose
    /// neighbouring cell `nb[k]` lies outside the region.
    fn clip(
        &mut self,
        i: usize,
        j: usize,
        pairs: [Option<(usize, usize)>; 2],
        ids: [usize; 4],
        crosses: [Option<()>; 4],
        nb: [(isize, isize); 4],
    ) {
        if self.clipped.is_none() || !self.cell_in(i, j) {
            return;
        }
        let outside: [bool; 4] = std::array::from_fn(|k| match self.cell_exists(nb[k].0, nb[k].1) {
            None => true,
            Some((a, b)) => !self.cell_in(a, b),
        });
        let ds = self.clipped.as_mut().expect("checked");
        for (a, b) in pairs.into_iter().flatten() {
            ds.union(ids[a], ids[b]);
        }
        for k in 0..4 {
            if crosses[k].is_some() && outside[k] {
                self.touching.push(ids[k]);
            }
        }
    }

    /// Domain unions for one (sub-)cell with corner labels `n`. Returns
    /// whether the cell was ambiguous.
    fn marching(&mut self, n: [usize; 4], s: [bool; 4], crosses: [bool; 4], decide: impl Fn() -> bool) -> bool {
        for (k, &(a, b)) in SIDES.iter().enumerate() {
            if !crosses[k] {
                self.domains.union(n[a], n[b]);
            } else {
                self.domains.activate(n[a]);
                self.domains.activate(n[b]);
            }
        }
        if crosses.iter().all(|&c| c) {
            if decide() == s[0] {
                self.domains.union(n[0], n[2]);
            } else {
                self.domains.union(n[1], n[3]);
            }
            return true;
        }
        false
    }

    /// Sides whose crossings are joined inside the cell.
    fn pairing(&self, s: [bool; 4], crosses: [bool; 4], decide: &dyn Fn() -> bool) -> [Option<(usize, usize)>; 2] {
        match crosses.iter().filter(|&&c| c).count() {
            0 => [None, None],
            2 => {
                let mut it = (0..4).filter(|&k| crosses[k]);
                [Some((it.next().expect("two"), it.next().expect("two"))), None]
            }
            4 => {
                if decide() == s[0] {
                    // n0 and n2 joined through the cell; arcs cut off n1 and n3.
                    [Some((0, 1)), Some((2, 3))]
                } else {
                    [Some((0, 3)), Some((1, 2))]
                }
            }
            _ => unreachable!("a cell has an even number of crossings"),
        }
    }

    fn refined_cell(
        &mut self,
        i: usize,
        j: usize,
        k: usize,
        r: &Refinement,
        sub: &mut SubgridValues,
        shared: &mut SharedIds,
    ) {
        self.refined_cells += 1;
        let counted = self.cell_in(i, j);
        let (nx, ny) = (self.nx, self.ny);
        let (i1, j1) = ((i + 1) % nx, (j + 1) % ny);
        let (edges, wrap, neighbours) = self.cell_edges(i, j);
        let exists = neighbours.map(|(a, b)| self.cell_exists(a, b));
        // A side is sampled finely unless a cell refined differently shares it.
        let fine_side = exists.map(|c| match c {
            None => true,
            Some((a, b)) => r.cells[a * ny + b] == k,
        });
        let border = exists.map(|c| c.is_none());
        let corner_value = |a: usize, b: usize| self.values.get(a, b);
        let v00 = corner_value(i, j);
        let v10 = corner_value(i1, j);
        let v11 = corner_value(i1, j1);
        let v01 = corner_value(i, j1);
        // Canonical position of sub-node (a, b) of this cell.
        let canon = |a: usize, b: usize| -> (usize, usize, usize, usize) {
            let (ii, aa) = if a == k { (i1, 0) } else { (i, a) };
            let (jj, bb) = if b == k { (j1, 0) } else { (j, b) };
            (ii, aa, jj, bb)
        };
        // Side of the cell a boundary sub-node lies on (corners excluded).
        let side_of = |a: usize, b: usize| -> Option<usize> {
            match (a, b) {
                (_, 0) if a > 0 && a < k => Some(0),
                (a, _) if a == k && b > 0 && b < k => Some(1),
                (_, b) if b == k && a > 0 && a < k => Some(2),
                (0, _) if b > 0 && b < k => Some(3),
                _ => None,
            }
        };

        let m = k + 1;
        let mut val = vec![0.0; m * m];
        let mut lab = vec![usize::MAX; m * m];
        for a in 0..=k {
            for b in 0..=k {
                let t = |x: usize| x as f64 / k as f64;
                let (v, label) = match (a, b) {
                    (0, 0) => (v00, Some(self.node(i, j))),
                    (a, 0) if a == k => (v10, Some(self.node(i1, j))),
                    (a, b) if a == k && b == k => (v11, Some(self.node(i1, j1))),
                    (0, b) if b == k => (v01, Some(self.node(i, j1))),
                    _ => match side_of(a, b) {
                        Some(side) if !fine_side[side] => {
                            let v = match side {
                                0 => v00 + t(a) * (v10 - v00),
                                1 => v10 + t(b) * (v11 - v10),
                                2 => v01 + t(a) * (v11 - v01),
                                _ => v00 + t(b) * (v01 - v00),
                            };
                            (v, None)
                        }
                        Some(_) => {
                            let (ii, aa, jj, bb) = canon(a, b);
                            let v = sub.value(ii, aa, jj, bb);
                            let key = (ii * ny + jj, aa, bb);
                            let label = match shared.nodes.get(&key) {
                                Some(&l) => l,
                                None => {
                                    let l = self.new_domain_label(is_positive(v));
                                    shared.nodes.insert(key, l);
                                    l
                                }
                            };
                            (v, Some(label))
                        }
                        None => (sub.value(i, a, j, b), None),
                    },
                };
                val[a * m + b] = v;
                lab[a * m + b] = match label {
                    Some(l) => l,
                    None => self.new_domain_label(is_positive(v)),
                };
            }
        }

        // Crossing labels of interior sub-edges, allocated on first use.
        let mut horizontal = vec![usize::MAX; m * m];
        let mut vertical = vec![usize::MAX; m * m];
        let hs = sub.sub_step();
        let kf = k as f64;
        for a in 0..k {
            for b in 0..k {
                let p = [(a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)];
                let n = p.map(|(x, y)| lab[x * m + y]);
                let v = p.map(|(x, y)| val[x * m + y]);
                let s = v.map(is_positive);
                let crosses = [s[0] != s[1], s[1] != s[2], s[3] != s[2], s[0] != s[3]];
                if !crosses.iter().any(|&c| c) {
                    if counted {
                        self.marching(n, s, crosses, || true);
                    }
                    continue;
                }
                let corner = sub.corner(i, a, j, b);
                let field = sub.field();
                let decided = std::cell::OnceCell::new();
                let decide = || *decided.get_or_init(|| is_positive(saddle_value(field, corner, hs, r.rule)));
                if counted {
                    self.marching(n, s, crosses, decide);
                }
                if crosses.iter().all(|&c| c) {
                    self.saddle_cells += 1;
                }
                // Sub-edges: bottom, right, top, left, each as (lower sub-node, direction).
                let sides = [((a, b), 0u8), ((a + 1, b), 1u8), ((a, b + 1), 0u8), ((a, b), 1u8)];
                let mut ids = [(0usize, [0i32; 2]); 4];
                for q in 0..4 {
                    if !crosses[q] {
                        continue;
                    }
                    let ((x, y), dir) = sides[q];
                    // Which side of the grid cell this sub-edge lies on, if any.
                    let cell_side = match (dir, x, y) {
                        (0, _, 0) => Some(0),
                        (0, _, y) if y == k => Some(2),
                        (1, 0, _) => Some(3),
                        (1, x, _) if x == k => Some(1),
                        _ => None,
                    };
                    ids[q] = match cell_side {
                        Some(side) if !fine_side[side] => (edges[side], wrap[side]),
                        Some(side) => {
                            let (ii, aa, jj, bb) = canon(x, y);
                            let key = ((ii * ny + jj, aa, bb), dir);
                            let id = match shared.edges.get(&key) {
                                Some(&id) => id,
                                None => {
                                    let id = self.new_zero_label();
                                    shared.edges.insert(key, id);
                                    id
                                }
                            };
                            (id, wrap[side])
                        }
                        None => {
                            let slot = if dir == 0 { &mut horizontal } else { &mut vertical };
                            if slot[x * m + y] == usize::MAX {
                                slot[x * m + y] = self.new_zero_label();
                            }
                            (slot[x * m + y], [0, 0])
                        }
                    };
                    if !self.periodic {
                        let (ca, cb) = SIDES[q];
                        let t = v[ca] / (v[ca] - v[cb]);
                        let (fx, fy) = if dir == 0 { (x as f64 + t, y as f64) } else { (x as f64, y as f64 + t) };
                        let at = [i as f64 + fx / kf, j as f64 + fy / kf];
                        let on_border = cell_side.is_some_and(|side| border[side]);
                        self.mark(ids[q].0, at, on_border);
                    }
                }
                let pairs = self.pairing(s, crosses, &decide);
                for (x, y) in pairs.into_iter().flatten() {
                    self.join(ids[x].0, ids[x].1, ids[y].0, ids[y].1);
                }
                if self.clipped.is_some() {
                    // Only sub-edges on the grid cell sides can meet the region boundary.
                    let on_side = [(b == 0).then_some(0), (a + 1 == k).then_some(1), (b + 1 == k).then_some(2), (a == 0).then_some(3)];
                    let mut nb = [(0isize, 0isize); 4];
                    let mut side_cross = [None; 4];
                    for q in 0..4 {
                        if crosses[q] {
                            side_cross[q] = Some(());
                        }
                        // Interior sub-edges border this same cell.
                        nb[q] = on_side[q].map_or((i as isize, j as isize), |side| neighbours[side]);
                    }
                    self.clip(i, j, pairs, ids.map(|x| x.0), side_cross, nb);
                }
            }
        }
    }

    fn finish(mut self) -> GridCount {
        let mut out = GridCount {
            saddle_cells: self.saddle_cells,
            refined_cells: self.refined_cells,
            ..GridCount::default()
        };
        if let Some(mut ds) = self.zero_plain.take() {
            let mut root_hits = vec![0u8; self.hits.len()];
            let active: Vec<usize> = ds.active().iter().map(|&x| x as usize).collect();
            for &x in &active {
                let r = ds.find(x);
                root_hits[r] |= self.hits[x];
            }
            for x in active {
                if ds.find(x) != x {
                    continue;
                }
                match root_hits[x] {
                    HIT_INSIDE => out.compact_zero += 1,
                    f if f == HIT_INSIDE | HIT_OUTSIDE => out.boundary_zero += 1,
                    _ => {}
                }
            }
            if let Some(mut clipped) = self.clipped.take() {
                let mut roots: Vec<usize> = self.touching.iter().map(|&e| clipped.find(e)).collect();
                roots.sort_unstable();
                roots.dedup();
                out.boundary_zero = roots.len() as u64;
            }
        }
        if let Some(ds) = self.zero_periodic.take() {
            for root in ds.roots() {
                if ds.wraps(root) {
                    out.wrapping_zero += 1;
                } else {
                    out.compact_zero += 1;
                }
            }
        }
        let grid_nodes = self.nx * self.ny;
        let roots: Vec<usize> = self.domains.roots().collect();
        for r in roots {
            let positive = if r < grid_nodes {
                self.sign[r]
            } else {
                self.extra_sign[r - grid_nodes]
            };
            if positive {
                out.positive_domains += 1;
            } else {
                out.negative_domains += 1;
            }
        }
        out
    }
}

/// Corner pairs of the four cell sides: bottom, right, top, left.
const SIDES: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];

#[cfg(test)]
mod tests;
