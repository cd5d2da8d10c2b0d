//! Finite atomic spectral probability measures supported in the closed unit disk.
//!
//! Every field model in the crate is parametrized by a [`SpectralMeasure`].
//! Angular operations ([`SpectralMeasure::fourier_coefficient`],
//! [`weak_star_distance`]) require all atoms on the unit circle.

use std::f64::consts::TAU;
use std::fmt;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for coincident atoms and for the total mass.
pub const ATOM_TOL: f64 = 1e-12;
/// Tolerance on `| |p| - 1 |` for angular operations.
pub const CIRCLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub point: [f64; 2],
    pub weight: f64,
}

impl Atom {
    pub fn new(x: f64, y: f64, weight: f64) -> Self {
        Atom { point: [x, y], weight }
    }

    fn angle(&self) -> f64 {
        let a = self.point[1].atan2(self.point[0]);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }

    fn norm(&self) -> f64 {
        self.point[0].hypot(self.point[1])
    }
}

/// Atomic probability measure on the closed unit disk.
///
/// Atoms are kept in canonical order (by angle in `[0, 2π)`, then radius), so
/// two measures built from the same points compare equal regardless of how
/// they were assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct SpectralMeasure {
    label: String,
    atoms: Vec<Atom>,
}

impl SpectralMeasure {
    /// Builds a measure, merging atoms closer than [`ATOM_TOL`] and checking the
    /// probability and support invariants.
    pub fn new(label: impl Into<String>, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let label = label.into();
        let mut merged: Vec<Atom> = Vec::new();
        for atom in atoms {
            let [x, y] = atom.point;
            if !(x.is_finite() && y.is_finite() && atom.weight.is_finite()) {
                return Err(Error::InvalidMeasure(format!("{label}: non-finite atom")));
            }
            if atom.weight <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "{label}: atom ({x}, {y}) has non-positive weight {}",
                    atom.weight
                )));
            }
            if atom.norm() > 1.0 + ATOM_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "{label}: atom ({x}, {y}) lies outside the unit disk"
                )));
            }
            match merged.iter_mut().find(|m| {
                (m.point[0] - x).abs() <= ATOM_TOL && (m.point[1] - y).abs() <= ATOM_TOL
            }) {
                Some(m) => m.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidMeasure(format!("{label}: no atoms")));
        }
        let total: f64 = merged.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > ATOM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "{label}: total mass {total} is not 1"
            )));
        }
        merged.sort_by(|a, b| {
            a.angle()
                .total_cmp(&b.angle())
                .then(a.norm().total_cmp(&b.norm()))
        });
        Ok(SpectralMeasure { label, atoms: merged })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Largest atom norm, the top frequency of the associated field.
    pub fn max_frequency(&self) -> f64 {
        self.atoms.iter().map(Atom::norm).fold(0.0, f64::max)
    }

    /// True when every atom lies on the unit circle (within [`CIRCLE_TOL`]).
    pub fn is_angular(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| (a.norm() - 1.0).abs() <= CIRCLE_TOL)
    }

    /// True when all atoms lie on one line through the origin. The gradient of
    /// the field is then degenerate and the zero set is a union of parallel lines.
    pub fn is_collinear(&self) -> bool {
        let Some(dir) = self.atoms.iter().find(|a| a.norm() > ATOM_TOL) else {
            return true;
        };
        let [dx, dy] = dir.point;
        self.atoms
            .iter()
            .all(|a| (a.point[0] * dy - a.point[1] * dx).abs() <= 1e-12)
    }

    /// `Σ w_j exp(-i k θ_j)`, defined for angular measures only.
    pub fn fourier_coefficient(&self, k: i32) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for atom in &self.atoms {
            let r = atom.norm();
            if (r - 1.0).abs() > CIRCLE_TOL {
                return Err(Error::NotAngular {
                    x: atom.point[0],
                    y: atom.point[1],
                });
            }
            let unit = Complex64::new(atom.point[0] / r, -atom.point[1] / r);
            acc += unit.powi(k) * atom.weight;
        }
        Ok(acc)
    }

    /// Invariance (within `tol`, weights included) under the quarter turn
    /// `(x, y) ↦ (-y, x)` and the reflection `(x, y) ↦ (x, -y)`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let has = |x: f64, y: f64, w: f64| {
            self.atoms.iter().any(|b| {
                (b.point[0] - x).abs() <= tol
                    && (b.point[1] - y).abs() <= tol
                    && (b.weight - w).abs() <= tol
            })
        };
        self.atoms.iter().all(|a| {
            let [x, y] = a.point;
            has(-y, x, a.weight) && has(x, -y, a.weight)
        })
    }
}

impl fmt::Display for SpectralMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} atoms)", self.label, self.atoms.len())
    }
}

/// Four equal atoms at angles `kπ/2`.
pub fn cilleruelo() -> SpectralMeasure {
    let atoms = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
        .into_iter()
        .map(|(x, y)| Atom::new(x, y, 0.25));
    SpectralMeasure::new("cilleruelo", atoms).expect("static measure")
}

/// Four equal atoms at angles `π/4 + kπ/2`.
pub fn tilted_cilleruelo() -> SpectralMeasure {
    // Same rounding as `λ/√n` for n = 2, so that `mu_n:2` coincides bitwise.
    let s = 1.0 / 2f64.sqrt();
    let atoms = [(s, s), (-s, s), (-s, -s), (s, -s)]
        .into_iter()
        .map(|(x, y)| Atom::new(x, y, 0.25));
    SpectralMeasure::new("tilted-cilleruelo", atoms).expect("static measure")
}

/// Two atoms at `±e₁`. The field depends on `x₁` only.
pub fn pair() -> SpectralMeasure {
    SpectralMeasure::new(
        "pair",
        [Atom::new(1.0, 0.0, 0.5), Atom::new(-1.0, 0.0, 0.5)],
    )
    .expect("static measure")
}

/// Equally spaced quadrature of the uniform measure on the unit circle.
///
/// `num_atoms` must be a multiple of 4 and at least 8 so the discretization
/// stays invariant under quarter turns and reflection.
pub fn uniform_circle(num_atoms: usize) -> Result<SpectralMeasure> {
    if num_atoms < 8 || !num_atoms.is_multiple_of(4) {
        return Err(Error::InvalidMeasure(format!(
            "uniform circle needs a multiple of 4 atoms, at least 8 (got {num_atoms})"
        )));
    }
    let quarter = num_atoms / 4;
    let w = 1.0 / num_atoms as f64;
    let mut atoms = Vec::with_capacity(num_atoms);
    for j in 0..quarter {
        let theta = TAU * j as f64 / num_atoms as f64;
        let (s, c) = if j == 0 { (0.0, 1.0) } else { theta.sin_cos() };
        // Exact quarter-turn images of the first-quadrant points.
        atoms.push(Atom::new(c, s, w));
        atoms.push(Atom::new(-s, c, w));
        atoms.push(Atom::new(-c, -s, w));
        atoms.push(Atom::new(s, -c, w));
    }
    SpectralMeasure::new(format!("uniform{num_atoms}"), atoms)
}

/// The 𝒫_Symm orbit of the angle `theta`: atoms at `±θ + kπ/2` with equal weights
/// (4 atoms when `θ ≡ 0` or `π/4 (mod π/2)`, otherwise 8).
pub fn symmetric_orbit(theta: f64) -> SpectralMeasure {
    let (s, c) = theta.sin_cos();
    let mut pts = Vec::with_capacity(8);
    for (x, y) in [(c, s), (c, -s)] {
        pts.push((x, y));
        pts.push((-y, x));
        pts.push((-x, -y));
        pts.push((y, -x));
    }
    let mut unique: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if !unique
            .iter()
            .any(|q| (q.0 - p.0).abs() <= ATOM_TOL && (q.1 - p.1).abs() <= ATOM_TOL)
        {
            unique.push(p);
        }
    }
    let w = 1.0 / unique.len() as f64;
    SpectralMeasure::new(
        format!("orbit({theta})"),
        unique.into_iter().map(|(x, y)| Atom::new(x, y, w)),
    )
    .expect("orbit atoms lie on the unit circle")
}

/// Convex combination `(1 - t)·a + t·b`, merging coincident atoms.
///
/// `t = 0` and `t = 1` return `a` and `b` unchanged (labels included).
pub fn mix(a: &SpectralMeasure, b: &SpectralMeasure, t: f64) -> Result<SpectralMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidMeasure(format!(
            "mixing parameter {t} is outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let atoms = a
        .atoms
        .iter()
        .map(|x| Atom {
            weight: (1.0 - t) * x.weight,
            ..*x
        })
        .chain(b.atoms.iter().map(|x| Atom {
            weight: t * x.weight,
            ..*x
        }));
    SpectralMeasure::new(format!("mix({},{},{t})", a.label, b.label), atoms)
}

/// `max_{1 ≤ k ≤ K} |â(k) - b̂(k)|`, a pseudometric proxy for weak-* closeness
/// of angular measures. Negative harmonics are conjugates and add nothing.
pub fn weak_star_distance(
    a: &SpectralMeasure,
    b: &SpectralMeasure,
    max_harmonic: u32,
) -> Result<f64> {
    let mut best = 0.0f64;
    for k in 1..=max_harmonic as i32 {
        let d = (a.fourier_coefficient(k)? - b.fourier_coefficient(k)?).norm();
        best = best.max(d);
    }
    Ok(best)
}

/// Angle (radians, in `[0, 2π)`) of each atom.
pub fn atom_angles(m: &SpectralMeasure) -> Vec<f64> {
    m.atoms.iter().map(Atom::angle).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomJson {
    x: f64,
    y: f64,
    w: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureJson {
    label: String,
    atoms: Vec<AtomJson>,
}

impl TryFrom<MeasureJson> for SpectralMeasure {
    type Error = Error;

    fn try_from(value: MeasureJson) -> Result<Self> {
        SpectralMeasure::new(
            value.label,
            value.atoms.into_iter().map(|a| Atom::new(a.x, a.y, a.w)),
        )
    }
}

impl From<SpectralMeasure> for MeasureJson {
    fn from(m: SpectralMeasure) -> Self {
        MeasureJson {
            label: m.label,
            atoms: m
                .atoms
                .into_iter()
                .map(|a| AtomJson {
                    x: a.point[0],
                    y: a.point[1],
                    w: a.weight,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn cilleruelo_atoms() {
        let m = cilleruelo();
        assert_eq!(m.len(), 4);
        for (atom, expect) in m
            .atoms()
            .iter()
            .zip([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        {
            assert_eq!(atom.point, expect);
            assert_eq!(atom.weight, 0.25);
        }
        assert!(close(m.fourier_coefficient(4).unwrap(), 1.0.into(), 1e-12));
        assert!(close(m.fourier_coefficient(2).unwrap(), 0.0.into(), 1e-12));
        assert!(close(m.fourier_coefficient(0).unwrap(), 1.0.into(), 1e-15));
        assert!(m.is_symmetric(1e-12));
    }

    #[test]
    fn tilted_atoms() {
        let m = tilted_cilleruelo();
        let s = 2f64.sqrt() / 2.0;
        for a in m.atoms() {
            assert!((a.point[0].abs() - s).abs() < 1e-15);
            assert!((a.point[1].abs() - s).abs() < 1e-15);
            assert_eq!(a.weight, 0.25);
        }
        assert!(close(m.fourier_coefficient(4).unwrap(), (-1.0).into(), 1e-12));
        assert!(m.is_symmetric(1e-12));
    }

    #[test]
    fn uniform_circle_validation() {
        assert!(uniform_circle(4).is_err());
        assert!(uniform_circle(10).is_err());
        let u = uniform_circle(64).unwrap();
        assert_eq!(u.len(), 64);
        assert!(u.fourier_coefficient(4).unwrap().norm() < 1e-12);
        assert!(close(u.fourier_coefficient(64).unwrap(), 1.0.into(), 1e-12));
        assert!(u.is_symmetric(1e-12));
        assert!(uniform_circle(12).unwrap().is_symmetric(1e-12));
    }

    #[test]
    fn mix_examples() {
        let a = cilleruelo();
        let b = tilted_cilleruelo();
        assert_eq!(mix(&a, &b, 0.0).unwrap(), a);
        let half = mix(&a, &b, 0.5).unwrap();
        assert_eq!(half.len(), 8);
        assert!(half.atoms().iter().all(|x| (x.weight - 0.125).abs() < 1e-15));
        assert!(mix(&a, &b, 1.5).is_err());

        let u = uniform_circle(64).unwrap();
        for t in [0.1, 0.37, 0.9] {
            let m = mix(&a, &u, t).unwrap();
            // The four axis atoms of `a` coincide with atoms of `u`.
            assert_eq!(m.len(), 64);
            assert!(close(m.fourier_coefficient(4).unwrap(), (1.0 - t).into(), 1e-12));
            assert!((weak_star_distance(&a, &m, 4).unwrap() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_checks() {
        let inner = SpectralMeasure::new(
            "inner",
            [Atom::new(0.5, 0.0, 0.5), Atom::new(-0.5, 0.0, 0.5)],
        )
        .unwrap();
        assert!(matches!(
            inner.fourier_coefficient(1),
            Err(Error::NotAngular { .. })
        ));
        assert!(weak_star_distance(&inner, &cilleruelo(), 2).is_err());
    }

    #[test]
    fn symmetry_examples() {
        assert!(!pair().is_symmetric(1e-12));
        assert!(pair().is_collinear());
        assert!(!cilleruelo().is_collinear());
        assert!(symmetric_orbit(0.3).is_symmetric(1e-12));
        assert_eq!(symmetric_orbit(0.3).len(), 8);
        assert_eq!(symmetric_orbit(0.0).len(), 4);
    }

    #[test]
    fn weak_star_examples() {
        let a = cilleruelo();
        let b = tilted_cilleruelo();
        assert_eq!(weak_star_distance(&a, &a, 8).unwrap(), 0.0);
        assert!((weak_star_distance(&a, &b, 4).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(SpectralMeasure::new("x", []).is_err());
        assert!(SpectralMeasure::new("x", [Atom::new(2.0, 0.0, 1.0)]).is_err());
        assert!(SpectralMeasure::new("x", [Atom::new(1.0, 0.0, 0.9)]).is_err());
        assert!(SpectralMeasure::new(
            "x",
            [Atom::new(1.0, 0.0, 1.5), Atom::new(0.0, 1.0, -0.5)]
        )
        .is_err());
        let merged = SpectralMeasure::new(
            "x",
            [Atom::new(1.0, 0.0, 0.5), Atom::new(1.0 + 1e-14, 0.0, 0.5)],
        )
        .unwrap();
        assert_eq!(merged.len(), 1);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let m = mix(&uniform_circle(64).unwrap(), &symmetric_orbit(0.123), 0.3).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: SpectralMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(text.starts_with("{\"label\":"));
        assert!(serde_json::from_str::<SpectralMeasure>(
            r#"{"label":"x","atoms":[{"x":1,"y":0,"w":1,"z":0}]}"#
        )
        .is_err());
    }

    fn random_angular() -> impl Strategy<Value = SpectralMeasure> {
        prop::collection::vec((0.0..TAU, 0.05f64..1.0), 1..12).prop_map(|pts| {
            let total: f64 = pts.iter().map(|p| p.1).sum();
            let atoms: Vec<Atom> = pts
                .iter()
                .map(|&(th, w)| Atom::new(th.cos(), th.sin(), w / total))
                .collect();
            // Renormalize exactly after merging round-off.
            let s: f64 = atoms.iter().map(|a| a.weight).sum();
            SpectralMeasure::new(
                "random",
                atoms.into_iter().map(|a| Atom {
                    weight: a.weight / s,
                    ..a
                }),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn fourier_is_linear_in_the_measure(a in random_angular(), b in random_angular(),
                                            t in 0.0f64..=1.0, k in -9i32..10) {
            let m = mix(&a, &b, t).unwrap();
            let lhs = m.fourier_coefficient(k).unwrap();
            let rhs = a.fourier_coefficient(k).unwrap() * (1.0 - t)
                + b.fourier_coefficient(k).unwrap() * t;
            prop_assert!(close(lhs, rhs, 1e-12));
        }

        #[test]
        fn symmetric_measures_have_real_quartic_spectrum(theta in 0.0f64..TAU, n in 2usize..20,
                                                         t in 0.0f64..=1.0, k in -17i32..18) {
            let m = mix(&symmetric_orbit(theta), &uniform_circle(4 * n).unwrap(), t).unwrap();
            prop_assert!(m.is_symmetric(1e-12));
            let c = m.fourier_coefficient(k).unwrap();
            prop_assert!(c.im.abs() < 1e-12);
            if k % 4 != 0 {
                prop_assert!(c.re.abs() < 1e-12);
            }
        }

        #[test]
        fn weak_star_is_a_pseudometric(a in random_angular(), b in random_angular(),
                                       c in random_angular(), k in 1u32..12) {
            let ab = weak_star_distance(&a, &b, k).unwrap();
            let ba = weak_star_distance(&b, &a, k).unwrap();
            let bc = weak_star_distance(&b, &c, k).unwrap();
            let ac = weak_star_distance(&a, &c, k).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
