//! Sampling of centred stationary Gaussian fields with atomic spectral measures.
//!
//! A sample is always an explicit trigonometric polynomial
//! `f(x) = Σ c_j cos(2π⟨x, λ_j⟩) + s_j sin(2π⟨x, λ_j⟩)`, kept alongside the
//! grid so the topology code can evaluate it exactly between grid nodes.
//! Planar windows are evaluated through a separable rank-`2J` product; torus
//! eigenfunctions through a 2-D inverse FFT.

use std::f64::consts::TAU;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{in_s, sum_two_squares_reps};
use crate::measure::SpectralMeasure;
use crate::seed::{derive_seed, rng_from_seed};

/// Default planar grid step: 20 samples per unit wavelength.
pub const DEFAULT_STEP: f64 = 0.05;
/// Coarsest planar step accepted by [`sample_planar`].
pub const MAX_STEP: f64 = 0.1;
/// Torus grid points per `⌈√n⌉`.
pub const TORUS_POINTS_PER_ROOT: usize = 8;

/// Value, gradient and Hessian `(∂₁₁, ∂₁₂, ∂₂₂)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

/// A smooth scalar field that can be evaluated anywhere, not just on grid nodes.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn jet(&self, x: [f64; 2]) -> Jet;

    fn value(&self, x: [f64; 2]) -> f64 {
        self.jet(x).value
    }

    /// Upper bound for `|∇∂₁f|` over the plane, if known.
    fn partial1_gradient_bound(&self) -> Option<f64> {
        None
    }

    /// The field as a trigonometric sum, when it is one.
    fn as_trig_sum(&self) -> Option<&TrigSum> {
        None
    }
}

/// Real trigonometric polynomial with frequencies `λ_j` (cycles per unit length).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSum {
    pub freqs: Vec<[f64; 2]>,
    pub cos_amp: Vec<f64>,
    pub sin_amp: Vec<f64>,
}

impl TrigSum {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Sum of `|c_j| + |s_j|`, a bound for `|f|`.
    pub fn amplitude_bound(&self) -> f64 {
        self.cos_amp
            .iter()
            .zip(&self.sin_amp)
            .map(|(c, s)| c.abs() + s.abs())
            .sum()
    }

    /// Bound on `|∇∂₁f|` from the amplitudes.
    pub fn partial1_hessian_bound(&self) -> f64 {
        self.freqs
            .iter()
            .zip(self.cos_amp.iter().zip(&self.sin_amp))
            .map(|(l, (c, s))| {
                let r = l[0].hypot(l[1]);
                TAU.powi(2) * l[0].abs() * r * (c.abs() + s.abs())
            })
            .sum()
    }

    /// `∂f/∂x_axis` as another trigonometric sum.
    pub fn derivative(&self, axis: usize) -> TrigSum {
        let mut cos_amp = Vec::with_capacity(self.len());
        let mut sin_amp = Vec::with_capacity(self.len());
        for (l, (c, s)) in self.freqs.iter().zip(self.cos_amp.iter().zip(&self.sin_amp)) {
            let k = TAU * l[axis];
            cos_amp.push(k * s);
            sin_amp.push(-k * c);
        }
        TrigSum {
            freqs: self.freqs.clone(),
            cos_amp,
            sin_amp,
        }
    }

    /// Evaluates on the tensor grid `xs × ys`, row-major with `x₁` as the slow index.
    pub fn grid(&self, xs: &[f64], ys: &[f64]) -> Grid {
        let (nx, ny, k) = (xs.len(), ys.len(), 2 * self.len());
        // f = Σ_j cos(v)(c cos u + s sin u) + sin(v)(s cos u - c sin u)
        // with u = 2πλ₁x₁ and v = 2πλ₂x₂, i.e. F = P·Qᵀ.
        let mut p = vec![0.0; nx * k];
        for (i, &x) in xs.iter().enumerate() {
            let row = &mut p[i * k..(i + 1) * k];
            for (j, (l, (c, s))) in self
                .freqs
                .iter()
                .zip(self.cos_amp.iter().zip(&self.sin_amp))
                .enumerate()
            {
                let (su, cu) = (TAU * l[0] * x).sin_cos();
                row[2 * j] = c * cu + s * su;
                row[2 * j + 1] = s * cu - c * su;
            }
        }
        let mut q = vec![0.0; ny * k];
        for (i, &y) in ys.iter().enumerate() {
            let row = &mut q[i * k..(i + 1) * k];
            for (j, l) in self.freqs.iter().enumerate() {
                let (sv, cv) = (TAU * l[1] * y).sin_cos();
                row[2 * j] = cv;
                row[2 * j + 1] = sv;
            }
        }
        let mut data = vec![0.0; nx * ny];
        if k > 0 && nx > 0 && ny > 0 {
            // SAFETY: the strides describe the row-major buffers allocated above:
            // p is nx×k, q is ny×k read as its transpose k×ny, data is nx×ny.
            unsafe {
                matrixmultiply::dgemm(
                    nx,
                    k,
                    ny,
                    1.0,
                    p.as_ptr(),
                    k as isize,
                    1,
                    q.as_ptr(),
                    1,
                    k as isize,
                    0.0,
                    data.as_mut_ptr(),
                    ny as isize,
                    1,
                );
            }
        }
        Grid { nx, ny, data }
    }
}

impl ScalarField for TrigSum {
    fn jet(&self, x: [f64; 2]) -> Jet {
        let mut out = Jet {
            value: 0.0,
            grad: [0.0; 2],
            hess: [0.0; 3],
        };
        for (l, (c, s)) in self.freqs.iter().zip(self.cos_amp.iter().zip(&self.sin_amp)) {
            let (sn, cs) = (TAU * (l[0] * x[0] + l[1] * x[1])).sin_cos();
            let v = c * cs + s * sn;
            let d = s * cs - c * sn;
            let k = [TAU * l[0], TAU * l[1]];
            out.value += v;
            out.grad[0] += k[0] * d;
            out.grad[1] += k[1] * d;
            out.hess[0] -= k[0] * k[0] * v;
            out.hess[1] -= k[0] * k[1] * v;
            out.hess[2] -= k[1] * k[1] * v;
        }
        out
    }

    fn partial1_gradient_bound(&self) -> Option<f64> {
        Some(self.partial1_hessian_bound())
    }

    fn as_trig_sum(&self) -> Option<&TrigSum> {
        Some(self)
    }

    fn value(&self, x: [f64; 2]) -> f64 {
        self.freqs
            .iter()
            .zip(self.cos_amp.iter().zip(&self.sin_amp))
            .map(|(l, (c, s))| {
                let (sn, cs) = (TAU * (l[0] * x[0] + l[1] * x[1])).sin_cos();
                c * cs + s * sn
            })
            .sum()
    }
}

/// Dense 2-D array, `data[i * ny + j]` holds the node `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny, "grid buffer size");
        Grid { nx, ny, data }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                data.push(f(i, j));
            }
        }
        Grid { nx, ny, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum Domain {
    /// Nodes `(k₁h, k₂h)` for `|k₁|, |k₂| ≤ half_count`, covering `[-R, R]²`.
    PlanarWindow {
        radius: f64,
        step: f64,
        half_count: usize,
    },
    /// `N × N` nodes `(i/N, j/N)` of the unit torus.
    Torus { size: usize, n: u64 },
}

impl Domain {
    pub fn planar(radius: f64, step: f64) -> Self {
        let half_count = (radius / step - 1e-9).ceil().max(1.0) as usize;
        Domain::PlanarWindow {
            radius,
            step,
            half_count,
        }
    }

    /// Coordinate of grid index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        match *self {
            Domain::PlanarWindow {
                step, half_count, ..
            } => (i as f64 - half_count as f64) * step,
            Domain::Torus { size, .. } => i as f64 / size as f64,
        }
    }

    pub fn nodes_per_axis(&self) -> usize {
        match *self {
            Domain::PlanarWindow { half_count, .. } => 2 * half_count + 1,
            Domain::Torus { size, .. } => size,
        }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            Domain::PlanarWindow { step, .. } => step,
            Domain::Torus { size, .. } => 1.0 / size as f64,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    fn axis(&self) -> Vec<f64> {
        (0..self.nodes_per_axis()).map(|i| self.coord(i)).collect()
    }
}

/// One realization of a Gaussian field on a planar window or the torus.
#[derive(Clone)]
pub struct FieldSample {
    pub domain: Domain,
    pub values: Grid,
    pub grad1: Option<Grid>,
    pub grad2: Option<Grid>,
    pub seed: u64,
    pub measure_label: String,
    field: Arc<dyn ScalarField>,
}

impl fmt::Debug for FieldSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSample")
            .field("domain", &self.domain)
            .field("nx", &self.values.nx)
            .field("ny", &self.values.ny)
            .field("has_gradient", &self.grad1.is_some())
            .field("seed", &self.seed)
            .field("measure_label", &self.measure_label)
            .finish()
    }
}

impl FieldSample {
    /// Samples an arbitrary smooth field on a planar window. Used to feed
    /// deterministic, non-Gaussian test fields through the counting code.
    pub fn synthetic_planar(
        radius: f64,
        step: f64,
        field: Arc<dyn ScalarField>,
        label: impl Into<String>,
        with_gradient: bool,
    ) -> Self {
        let domain = Domain::planar(radius, step);
        let n = domain.nodes_per_axis();
        let values = Grid::from_fn(n, n, |i, j| field.value([domain.coord(i), domain.coord(j)]));
        let (grad1, grad2) = if with_gradient {
            let g1 = Grid::from_fn(n, n, |i, j| field.jet([domain.coord(i), domain.coord(j)]).grad[0]);
            let g2 = Grid::from_fn(n, n, |i, j| field.jet([domain.coord(i), domain.coord(j)]).grad[1]);
            (Some(g1), Some(g2))
        } else {
            (None, None)
        };
        FieldSample {
            domain,
            values,
            grad1,
            grad2,
            seed: 0,
            measure_label: label.into(),
            field,
        }
    }

    /// The exact field behind the grid.
    pub fn field(&self) -> &dyn ScalarField {
        self.field.as_ref()
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.domain.coord(i), self.domain.coord(j)]
    }
}

/// Draws the coefficients of a planar sample: `c_j = √w_j ξ_j`, `s_j = √w_j η_j`.
pub fn draw_planar(m: &SpectralMeasure, seed: u64) -> TrigSum {
    let mut rng = rng_from_seed(seed);
    let mut freqs = Vec::with_capacity(m.len());
    let mut cos_amp = Vec::with_capacity(m.len());
    let mut sin_amp = Vec::with_capacity(m.len());
    for atom in m.atoms() {
        let a = atom.weight.sqrt();
        let xi: f64 = rng.sample(StandardNormal);
        let eta: f64 = rng.sample(StandardNormal);
        freqs.push(atom.point);
        cos_amp.push(a * xi);
        sin_amp.push(a * eta);
    }
    TrigSum {
        freqs,
        cos_amp,
        sin_amp,
    }
}

pub fn check_planar(radius: f64, step: f64) -> Result<()> {
    if !(step > 0.0 && step <= MAX_STEP) {
        return Err(Error::Resolution(format!(
            "grid step {step} must lie in (0, {MAX_STEP}]"
        )));
    }
    if !(radius >= 1.0 && radius.is_finite()) {
        return Err(Error::Resolution(format!("window radius {radius} must be ≥ 1")));
    }
    Ok(())
}

/// Samples `f(x) = Σ √w_j (ξ_j cos 2π⟨x,λ_j⟩ + η_j sin 2π⟨x,λ_j⟩)` on `[-R, R]²`
/// with step `h`. The covariance is exactly `Σ w_j cos 2π⟨λ_j, x⟩`.
pub fn sample_planar(
    m: &SpectralMeasure,
    radius: f64,
    step: f64,
    seed: u64,
    with_gradient: bool,
) -> Result<FieldSample> {
    check_planar(radius, step)?;
    let trig = draw_planar(m, seed);
    let domain = Domain::planar(radius, step);
    let axis = domain.axis();
    let values = trig.grid(&axis, &axis);
    let (grad1, grad2) = if with_gradient {
        (
            Some(trig.derivative(0).grid(&axis, &axis)),
            Some(trig.derivative(1).grid(&axis, &axis)),
        )
    } else {
        (None, None)
    };
    Ok(FieldSample {
        domain,
        values,
        grad1,
        grad2,
        seed,
        measure_label: m.label().to_string(),
        field: Arc::new(trig),
    })
}

/// Smallest `N ≥ 8⌈√n⌉` with no prime factor above 7.
pub fn default_torus_size(n: u64) -> usize {
    let min = TORUS_POINTS_PER_ROOT * ((n as f64).sqrt().ceil() as usize).max(1);
    (min..).find(|&k| is_smooth(k)).expect("7-smooth numbers are unbounded")
}

fn is_smooth(mut k: usize) -> bool {
    for p in [2, 3, 5, 7] {
        while k.is_multiple_of(p) {
            k /= p;
        }
    }
    k == 1
}

/// Checks that `n` is a sum of two squares and that `size` is an admissible grid.
pub fn check_torus(n: u64, size: usize) -> Result<()> {
    if !in_s(n) {
        return Err(Error::EmptyEigenspace(n));
    }
    let min = TORUS_POINTS_PER_ROOT * (n as f64).sqrt().ceil() as usize;
    if size < min {
        return Err(Error::Resolution(format!(
            "torus grid {size} is below {min} = 8⌈√{n}⌉"
        )));
    }
    if !is_smooth(size) {
        return Err(Error::Resolution(format!(
            "torus grid {size} has a prime factor above 7"
        )));
    }
    Ok(())
}

/// Random toral eigenfunction `fₙ = r₂(n)^{-1/2} Σ_{‖λ‖²=n} a_λ e^{2πi⟨x,λ⟩}`
/// with `a_{-λ} = conj(a_λ)` and i.i.d. standard complex Gaussians otherwise,
/// evaluated on the `N × N` grid by inverse FFT.
pub fn sample_torus(n: u64, size: usize, seed: u64) -> Result<FieldSample> {
    check_torus(n, size)?;
    let reps = sum_two_squares_reps(n);

    let norm = 1.0 / (reps.r2() as f64).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); size * size];
    let wrap = |v: i64| v.rem_euclid(size as i64) as usize;
    let mut freqs = Vec::new();
    let mut cos_amp = Vec::new();
    let mut sin_amp = Vec::new();
    for &[a, b] in &reps.points {
        if !(a > 0 || (a == 0 && b > 0)) {
            continue;
        }
        let xi: f64 = rng.sample(StandardNormal);
        let eta: f64 = rng.sample(StandardNormal);
        let coef = Complex64::new(xi, eta) * (norm / 2f64.sqrt());
        spectrum[wrap(a) * size + wrap(b)] = coef;
        spectrum[wrap(-a) * size + wrap(-b)] = coef.conj();
        // 2 Re(a e^{iθ}) = 2 a_re cos θ - 2 a_im sin θ
        freqs.push([a as f64, b as f64]);
        cos_amp.push(2.0 * coef.re);
        sin_amp.push(-2.0 * coef.im);
    }

    inverse_fft_2d(&mut spectrum, size);
    let max_re = spectrum.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let max_im = spectrum.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if max_im >= 1e-9 * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::Counting(format!(
            "torus sample has imaginary residue {max_im:e}"
        )));
    }
    let values = Grid::new(size, size, spectrum.iter().map(|z| z.re).collect());
    Ok(FieldSample {
        domain: Domain::Torus { size, n },
        values,
        grad1: None,
        grad2: None,
        seed,
        measure_label: format!("mu_n:{n}"),
        field: Arc::new(TrigSum {
            freqs,
            cos_amp,
            sin_amp,
        }),
    })
}

/// Unnormalized `x[j] = Σ_k X[k] e^{+2πi⟨j,k⟩/N}` on a square row-major buffer.
fn inverse_fft_2d(buf: &mut [Complex64], size: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(size);
    fft.process(buf);
    let mut column = vec![Complex64::new(0.0, 0.0); size];
    for j in 0..size {
        for i in 0..size {
            column[i] = buf[i * size + j];
        }
        fft.process(&mut column);
        for i in 0..size {
            buf[i * size + j] = column[i];
        }
    }
}

/// `r(x) = Σ w_j cos 2π⟨λ_j, x⟩`.
pub fn covariance_theoretical(m: &SpectralMeasure, x: [f64; 2]) -> f64 {
    m.atoms()
        .iter()
        .map(|a| a.weight * (TAU * (a.point[0] * x[0] + a.point[1] * x[1])).cos())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceProbe {
    pub lags: Vec<[f64; 2]>,
    pub theoretical: Vec<f64>,
    pub empirical: Vec<f64>,
    /// Standard error of each empirical mean.
    pub stderr: Vec<f64>,
    pub num_samples: usize,
}

/// Empirical `E[f(0) f(lag)]` over `num_samples` independent planar samples.
pub fn covariance_probe(
    m: &SpectralMeasure,
    lags: &[[f64; 2]],
    num_samples: usize,
    seed: u64,
) -> Result<CovarianceProbe> {
    covariance_probe_at(m, [0.0, 0.0], lags, num_samples, seed)
}

/// As [`covariance_probe`] but with products `f(base)·f(base + lag)`.
pub fn covariance_probe_at(
    m: &SpectralMeasure,
    base: [f64; 2],
    lags: &[[f64; 2]],
    num_samples: usize,
    seed: u64,
) -> Result<CovarianceProbe> {
    if num_samples < 100 {
        return Err(Error::Precondition(format!(
            "covariance probe needs at least 100 samples (got {num_samples})"
        )));
    }
    let mut sum = vec![0.0; lags.len()];
    let mut sum_sq = vec![0.0; lags.len()];
    for s in 0..num_samples {
        let trig = draw_planar(m, derive_seed(seed, s as u64));
        let f0 = trig.value(base);
        for (k, lag) in lags.iter().enumerate() {
            let p = f0 * trig.value([base[0] + lag[0], base[1] + lag[1]]);
            sum[k] += p;
            sum_sq[k] += p * p;
        }
    }
    let nf = num_samples as f64;
    let empirical: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderr = sum_sq
        .iter()
        .zip(&empirical)
        .map(|(sq, mean)| ((sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0) / nf).sqrt())
        .collect();
    Ok(CovarianceProbe {
        lags: lags.to_vec(),
        theoretical: lags.iter().map(|&l| covariance_theoretical(m, l)).collect(),
        empirical,
        stderr,
        num_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    #[serde(flatten)]
    pub domain: Domain,
    pub seed: u64,
    pub measure: String,
    pub nx: usize,
    pub ny: usize,
}

/// Writes a JSON header line followed by the little-endian `f64` grid, row-major.
pub fn write_dump<W: Write>(sample: &FieldSample, mut out: W) -> Result<()> {
    let header = DumpHeader {
        domain: sample.domain,
        seed: sample.seed,
        measure: sample.measure_label.clone(),
        nx: sample.values.nx,
        ny: sample.values.ny,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for v in &sample.values.data {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut input: R) -> Result<(DumpHeader, Grid)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Config("dump has no header line".into()))?;
    let header: DumpHeader = serde_json::from_slice(&bytes[..split])?;
    let body = &bytes[split + 1..];
    if body.len() != 8 * header.nx * header.ny {
        return Err(Error::Config(format!(
            "dump body has {} bytes, expected {}",
            body.len(),
            8 * header.nx * header.ny
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let grid = Grid::new(header.nx, header.ny, data);
    Ok((header, grid))
}
