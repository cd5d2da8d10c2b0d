//! Monte Carlo estimators of the nodal component constant, with sweeps and fits.
//!
//! Normalization: planar estimates divide the number of compact components in
//! `B(0, R)` by `R²` (not by the area `πR²`). Torus estimates divide the number
//! of contractible components by `n/π`, the squared radius of the disk whose
//! area equals that of the rescaled torus `[0, √n)²`, so both numbers estimate
//! the same constant.

use std::f64::consts::PI;
use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::spectral_measure_mu_n;
use crate::measure::{mix, uniform_circle, weak_star_distance, SpectralMeasure};
use crate::seed::derive_seed;
use crate::synthesis::{check_planar, check_torus, sample_planar, sample_torus};
use crate::topology::{count_components, count_components_with, count_flips, CountOptions};

/// One Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub compact: u64,
    pub boundary: u64,
    pub pos_domains: u64,
    pub neg_domains: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flips: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrapping: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Scale {
    Planar { radius: f64, step: f64 },
    Torus { n: u64, size: usize },
}

impl Scale {
    /// Divisor turning a component count into the normalized constant.
    pub fn normalizer(&self) -> f64 {
        match *self {
            Scale::Planar { radius, .. } => radius * radius,
            Scale::Torus { n, .. } => n as f64 / PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub c_hat: f64,
    pub stderr: f64,
    pub trials: usize,
    pub scale: Scale,
    pub base_seed: u64,
    pub measure_label: String,
    /// Planar: mean boundary components per `R`. Torus: mean wrapping components.
    pub boundary_rate: f64,
    /// Mean of the raw per-trial compact counts.
    pub mean_count: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_flips: Option<f64>,
    /// The spectral measure is supported on a line (degenerate gradient).
    #[serde(default)]
    pub degenerate_measure: bool,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl EstimateResult {
    /// Rebuilds the summary from per-trial records, summing in trial order.
    pub fn from_records(
        records: Vec<TrialRecord>,
        scale: Scale,
        base_seed: u64,
        measure_label: &str,
    ) -> Self {
        let n = records.len() as f64;
        let norm = scale.normalizer();
        let per_trial: Vec<f64> = records.iter().map(|r| r.compact as f64 / norm).collect();
        let c_hat = records.iter().map(|r| r.compact as f64).sum::<f64>() / n / norm;
        let var = per_trial.iter().map(|v| (v - c_hat).powi(2)).sum::<f64>() / (n - 1.0);
        let stderr = (var / n).sqrt();
        let mean_count = records.iter().map(|r| r.compact as f64).sum::<f64>() / n;
        let boundary_rate = match scale {
            Scale::Planar { radius, .. } => {
                records.iter().map(|r| r.boundary as f64).sum::<f64>() / n / radius
            }
            Scale::Torus { .. } => {
                records.iter().map(|r| r.wrapping.unwrap_or(0) as f64).sum::<f64>() / n
            }
        };
        let mean_flips = records
            .iter()
            .map(|r| r.flips)
            .collect::<Option<Vec<u64>>>()
            .map(|f| f.iter().map(|&x| x as f64).sum::<f64>() / n);
        EstimateResult {
            c_hat,
            stderr,
            trials: records.len(),
            scale,
            base_seed,
            measure_label: measure_label.to_string(),
            boundary_rate,
            mean_count,
            mean_flips,
            degenerate_measure: false,
            records,
        }
    }

    /// Mean count of all zero components per trial (torus: including wrapping ones).
    pub fn mean_total_count(&self) -> f64 {
        let n = self.records.len() as f64;
        self.records
            .iter()
            .map(|r| (r.compact + r.boundary + r.wrapping.unwrap_or(0)) as f64)
            .sum::<f64>()
            / n
    }

    pub fn write_trial_log<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Standard error of the difference of two independent estimates.
pub fn combined_stderr(a: &EstimateResult, b: &EstimateResult) -> f64 {
    a.stderr.hypot(b.stderr)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarOptions {
    pub with_flips: bool,
    pub count: CountOptions,
}

/// Runs `trials` independent trials with seeds `derive_seed(base_seed, t)`.
/// Results are ordered by trial index whatever the worker count.
fn run_trials<F>(trials: usize, base_seed: u64, trial: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, u64) -> Result<TrialRecord> + Sync,
{
    let results: Vec<Result<TrialRecord>> = (0..trials)
        .into_par_iter()
        .map(|t| trial(t, derive_seed(base_seed, t as u64)))
        .collect();
    let mut completed = Vec::with_capacity(trials);
    let mut failure = None;
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => completed.push(rec),
            Err(e) if failure.is_none() => failure = Some((t, e)),
            Err(_) => {}
        }
    }
    match failure {
        None => Ok(completed),
        Some((trial, source)) => Err(Error::Aborted {
            trial,
            completed,
            source: Box::new(source),
        }),
    }
}

pub fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::Precondition(format!(
            "at least 2 trials are needed (got {trials})"
        )));
    }
    Ok(())
}

/// Mean number of compact nodal components in `B(0, R)` divided by `R²`.
pub fn estimate_cns_planar(
    m: &SpectralMeasure,
    radius: f64,
    step: f64,
    trials: usize,
    base_seed: u64,
) -> Result<EstimateResult> {
    estimate_cns_planar_with(m, radius, step, trials, base_seed, PlanarOptions::default())
}

pub fn estimate_cns_planar_with(
    m: &SpectralMeasure,
    radius: f64,
    step: f64,
    trials: usize,
    base_seed: u64,
    options: PlanarOptions,
) -> Result<EstimateResult> {
    check_trials(trials)?;
    check_planar(radius, step)?;
    let degenerate = m.is_collinear();
    if degenerate {
        warn!(
            "event=degenerate_measure measure={} note=atoms_on_a_line_zero_set_is_parallel_lines",
            m.label()
        );
    }
    let records = run_trials(trials, base_seed, |t, seed| {
        let sample = sample_planar(m, radius, step, seed, options.with_flips)?;
        let count = count_components_with(&sample, &options.count)?;
        let flips = if options.with_flips {
            let fc = count_flips(&sample)?;
            if !fc.degenerate.is_empty() {
                info!("event=degenerate_flips trial={t} count={}", fc.degenerate.len());
            }
            Some(fc.flips)
        } else {
            None
        };
        Ok(TrialRecord {
            trial: t,
            seed,
            compact: count.compact_zero_components,
            boundary: count.boundary_zero_components,
            pos_domains: count.positive_domains,
            neg_domains: count.negative_domains,
            flips,
            wrapping: None,
        })
    })?;
    let mut est = EstimateResult::from_records(
        records,
        Scale::Planar { radius, step },
        base_seed,
        m.label(),
    );
    est.degenerate_measure = degenerate;
    Ok(est)
}

/// Mean number of contractible nodal components of `fₙ` on the torus, times `π/n`.
/// Wrapping components are kept in the records and in `boundary_rate`.
pub fn estimate_cns_torus(n: u64, size: usize, trials: usize, base_seed: u64) -> Result<EstimateResult> {
    check_trials(trials)?;
    check_torus(n, size)?;
    let records = run_trials(trials, base_seed, |t, seed| {
        let sample = sample_torus(n, size, seed)?;
        let count = count_components(&sample)?;
        Ok(TrialRecord {
            trial: t,
            seed,
            compact: count.compact_zero_components,
            boundary: 0,
            pos_domains: count.positive_domains,
            neg_domains: count.negative_domains,
            flips: None,
            wrapping: Some(count.wrapping_zero_components),
        })
    })?;
    let est = EstimateResult::from_records(
        records,
        Scale::Torus { n, size },
        base_seed,
        &format!("mu_n:{n}"),
    );
    if est.boundary_rate > 0.0 {
        info!(
            "event=wrapping_components n={n} mean_per_trial={}",
            est.boundary_rate
        );
    }
    Ok(est)
}

/// Weighted least-squares fit of `E[N] = c·R² + b·R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    pub c: f64,
    pub b: f64,
    pub c_stderr: f64,
    pub b_stderr: f64,
    /// `mean count - fit` at each radius.
    pub residuals: Vec<f64>,
    /// Standard error of the mean count at each radius.
    pub count_stderr: Vec<f64>,
}

impl RemainderFit {
    /// Largest `|residual| / stderr`.
    pub fn max_residual_sigma(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.count_stderr)
            .map(|(r, s)| r.abs() / s.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Weighted fit of `ln E[N] = exponent·ln x + ln prefactor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
    /// Approximate 95% interval, `exponent ± 2·stderr`.
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fit", rename_all = "snake_case")]
pub enum SweepFit {
    Remainder(RemainderFit),
    PowerLaw(PowerLawFit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: f64,
    pub estimate: EstimateResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: String,
    pub points: Vec<SweepPoint>,
    pub fit: Option<SweepFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Jump of `c_hat` between adjacent sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub from: f64,
    pub to: f64,
    pub jump: f64,
    pub combined_stderr: f64,
}

impl SweepResult {
    fn new(kind: &str, points: Vec<SweepPoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].parameter >= w[1].parameter) {
            return Err(Error::Precondition(
                "sweep parameters must be strictly increasing".into(),
            ));
        }
        Ok(SweepResult {
            kind: kind.to_string(),
            points,
            fit: None,
            label: None,
        })
    }

    pub fn c_hats(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.estimate.c_hat).collect()
    }

    pub fn adjacent_jumps(&self) -> Vec<Jump> {
        self.points
            .windows(2)
            .map(|w| Jump {
                from: w[0].parameter,
                to: w[1].parameter,
                jump: (w[1].estimate.c_hat - w[0].estimate.c_hat).abs(),
                combined_stderr: combined_stderr(&w[0].estimate, &w[1].estimate),
            })
            .collect()
    }

    /// Spread `max c_hat - min c_hat` over the sweep.
    pub fn range(&self) -> f64 {
        let c = self.c_hats();
        let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// CSV with header `parameter,c_hat,stderr,trials`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "parameter,c_hat,stderr,trials")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{}",
                p.parameter, p.estimate.c_hat, p.estimate.stderr, p.estimate.trials
            )?;
        }
        Ok(())
    }
}

/// Solves the 2×2 weighted normal equations for `y ≈ β₀·u + β₁·v`.
/// Returns the coefficients and their standard errors.
fn weighted_ls2(u: &[f64], v: &[f64], y: &[f64], sigma: &[f64]) -> Result<([f64; 2], [f64; 2])> {
    let (mut suu, mut suv, mut svv, mut suy, mut svy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..y.len() {
        let w = 1.0 / (sigma[k] * sigma[k]);
        suu += w * u[k] * u[k];
        suv += w * u[k] * v[k];
        svv += w * v[k] * v[k];
        suy += w * u[k] * y[k];
        svy += w * v[k] * y[k];
    }
    let det = suu * svv - suv * suv;
    if !(det.is_finite() && det.abs() > 0.0) {
        return Err(Error::InsufficientPoints);
    }
    let b0 = (svv * suy - suv * svy) / det;
    let b1 = (suu * svy - suv * suy) / det;
    Ok(([b0, b1], [(svv / det).sqrt(), (suu / det).sqrt()]))
}

/// Planar estimates across radii, with the fit `E[N] = c·R² + b·R`.
pub fn sweep_r(
    m: &SpectralMeasure,
    radii: &[f64],
    step: f64,
    trials: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if radii.len() < 3 {
        return Err(Error::InsufficientPoints);
    }
    let mut points = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let estimate = estimate_cns_planar(m, r, step, trials, derive_seed(base_seed, 1000 + k as u64))?;
        points.push(SweepPoint { parameter: r, estimate });
    }
    let mut sweep = SweepResult::new("R", points)?;
    sweep.fit = Some(SweepFit::Remainder(fit_remainder(&sweep)?));
    Ok(sweep)
}

/// Fits `E[N] = c·R² + b·R` to an R-sweep, weighting each radius by its
/// standard error (floored at one count per trial set to keep zero-variance
/// points finite).
pub fn fit_remainder(sweep: &SweepResult) -> Result<RemainderFit> {
    let r: Vec<f64> = sweep.points.iter().map(|p| p.parameter).collect();
    let y: Vec<f64> = sweep.points.iter().map(|p| p.estimate.mean_count).collect();
    let sigma: Vec<f64> = sweep
        .points
        .iter()
        .map(|p| {
            let s = p.estimate.stderr * p.parameter * p.parameter;
            s.max(1.0 / p.estimate.trials as f64)
        })
        .collect();
    let u: Vec<f64> = r.iter().map(|x| x * x).collect();
    let ([c, b], [c_se, b_se]) = weighted_ls2(&u, &r, &y, &sigma)?;
    let residuals = r
        .iter()
        .zip(&y)
        .map(|(x, yy)| yy - (c * x * x + b * x))
        .collect();
    Ok(RemainderFit {
        c,
        b,
        c_stderr: c_se,
        b_stderr: b_se,
        residuals,
        count_stderr: sigma,
    })
}

/// Estimates along the segment `mix(a, b, t)`.
pub fn continuity_path(
    a: &SpectralMeasure,
    b: &SpectralMeasure,
    ts: &[f64],
    radius: f64,
    step: f64,
    trials: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Precondition("path parameters must lie in [0, 1]".into()));
    }
    let mut points = Vec::with_capacity(ts.len());
    for &t in ts {
        let m = mix(a, b, t)?;
        // Same seeds at every t: the path is a deterministic function of t.
        let estimate = estimate_cns_planar(&m, radius, step, trials, base_seed)?;
        points.push(SweepPoint { parameter: t, estimate });
    }
    SweepResult::new("continuity", points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub start: f64,
    pub end: f64,
    pub end_stderr: f64,
    /// Largest gap between consecutive sorted `c_hat` values.
    pub max_gap: f64,
    pub max_adjacent_jump: f64,
    /// Gaps bounded by twice the largest adjacent jump.
    pub covered: bool,
}

/// Continuity path from the Cilleruelo measure to the 64-atom uniform measure,
/// with a report on how densely the estimates fill `[c(0), c(1)]`.
pub fn interval_sweep(
    ts: &[f64],
    radius: f64,
    step: f64,
    trials: usize,
    base_seed: u64,
) -> Result<(SweepResult, IntervalReport)> {
    let a = crate::measure::cilleruelo();
    let b = uniform_circle(64)?;
    let sweep = continuity_path(&a, &b, ts, radius, step, trials, base_seed)?;
    let report = interval_report(&sweep);
    Ok((sweep, report))
}

pub fn interval_report(sweep: &SweepResult) -> IntervalReport {
    let c = sweep.c_hats();
    let mut sorted = c.clone();
    sorted.sort_by(f64::total_cmp);
    let max_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let max_adjacent_jump = sweep.adjacent_jumps().iter().map(|j| j.jump).fold(0.0, f64::max);
    let last = sweep.points.last().map(|p| &p.estimate);
    IntervalReport {
        start: c.first().copied().unwrap_or(0.0),
        end: c.last().copied().unwrap_or(0.0),
        end_stderr: last.map(|e| e.stderr).unwrap_or(0.0),
        max_gap,
        max_adjacent_jump,
        covered: max_gap <= 2.0 * max_adjacent_jump,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierPairReport {
    pub a: String,
    pub b: String,
    pub coefficient4: f64,
    pub c_hat_a: f64,
    pub c_hat_b: f64,
    pub difference: f64,
    pub combined_stderr: f64,
    /// Difference above 3 combined standard errors.
    pub flagged: bool,
}

/// Compares measure pairs sharing `μ̂(4)` (and `μ̂(8)` when `match_eighth`).
/// Pairs failing the precondition are skipped with a warning.
pub fn fourier_dependence_scan(
    pairs: &[(SpectralMeasure, SpectralMeasure)],
    radius: f64,
    step: f64,
    trials: usize,
    base_seed: u64,
    match_eighth: bool,
) -> Result<Vec<FourierPairReport>> {
    let mut out = Vec::new();
    for (a, b) in pairs {
        let harmonics: &[i32] = if match_eighth { &[4, 8] } else { &[4] };
        let mut matched = true;
        for &k in harmonics {
            let (fa, fb) = match (a.fourier_coefficient(k), b.fourier_coefficient(k)) {
                (Ok(x), Ok(y)) => (x, y),
                _ => {
                    matched = false;
                    break;
                }
            };
            if (fa - fb).norm() > 1e-9 {
                matched = false;
            }
        }
        if !matched {
            warn!(
                "event=skipped_pair a={} b={} reason=fourier_coefficients_differ",
                a.label(),
                b.label()
            );
            continue;
        }
        let ea = estimate_cns_planar(a, radius, step, trials, base_seed)?;
        let eb = estimate_cns_planar(b, radius, step, trials, base_seed.wrapping_add(1))?;
        let se = combined_stderr(&ea, &eb);
        let difference = (ea.c_hat - eb.c_hat).abs();
        out.push(FourierPairReport {
            a: a.label().to_string(),
            b: b.label().to_string(),
            coefficient4: a.fourier_coefficient(4)?.re,
            c_hat_a: ea.c_hat,
            c_hat_b: eb.c_hat,
            difference,
            combined_stderr: se,
            flagged: difference > 3.0 * se,
        });
    }
    Ok(out)
}

/// Label carried by every growth report.
pub const GROWTH_LABEL: &str =
    "suggestive only: finite-n growth exponent along a lattice sequence, not a verification";

/// Restricts growth fits to sequences whose `μₙ` stays near a target.
#[derive(Debug, Clone)]
pub struct GrowthTarget {
    pub measure: SpectralMeasure,
    pub max_distance: f64,
    pub max_harmonic: u32,
}

impl GrowthTarget {
    /// `weak_star_distance(μₙ, ν₀, 4) ≤ 0.2`.
    pub fn cilleruelo() -> Self {
        GrowthTarget {
            measure: crate::measure::cilleruelo(),
            max_distance: 0.2,
            max_harmonic: 4,
        }
    }
}

/// Torus estimates along `n_list` and a log-log fit of the mean total number
/// of components against `n`.
pub fn cilleruelo_growth_fit(
    n_list: &[u64],
    size_rule: impl Fn(u64) -> usize,
    trials: usize,
    base_seed: u64,
    target: &GrowthTarget,
) -> Result<SweepResult> {
    if n_list.len() < 3 {
        return Err(Error::InsufficientPoints);
    }
    for &n in n_list {
        let mu = spectral_measure_mu_n(n)?;
        let d = weak_star_distance(&mu, &target.measure, target.max_harmonic)?;
        if d > target.max_distance {
            return Err(Error::Precondition(format!(
                "mu_{n} is at distance {d} > {} from {}",
                target.max_distance,
                target.measure.label()
            )));
        }
    }
    let mut points = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let estimate = estimate_cns_torus(n, size_rule(n), trials, derive_seed(base_seed, 2000 + k as u64))?;
        points.push(SweepPoint { parameter: n as f64, estimate });
    }
    let mut sweep = SweepResult::new("growth", points)?;
    sweep.fit = Some(SweepFit::PowerLaw(fit_power_law(&sweep)?));
    sweep.label = Some(GROWTH_LABEL.to_string());
    Ok(sweep)
}

/// Weighted fit of `ln(mean total count)` against `ln(parameter)`.
pub fn fit_power_law(sweep: &SweepResult) -> Result<PowerLawFit> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut sigma = Vec::new();
    for p in &sweep.points {
        let mean = p.estimate.mean_total_count();
        if mean <= 0.0 {
            return Err(Error::Precondition(format!(
                "no components at parameter {}",
                p.parameter
            )));
        }
        let n = p.estimate.records.len() as f64;
        let totals: Vec<f64> = p
            .estimate
            .records
            .iter()
            .map(|r| (r.compact + r.boundary + r.wrapping.unwrap_or(0)) as f64)
            .collect();
        let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt().max(1.0 / n);
        lx.push(p.parameter.ln());
        ly.push(mean.ln());
        sigma.push(se / mean);
    }
    let ones = vec![1.0; lx.len()];
    let ([slope, intercept], [slope_se, _]) = weighted_ls2(&lx, &ones, &ly, &sigma)?;
    Ok(PowerLawFit {
        exponent: slope,
        exponent_stderr: slope_se,
        prefactor: intercept.exp(),
        ci95: (slope - 2.0 * slope_se, slope + 2.0 * slope_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{cilleruelo, pair, tilted_cilleruelo};

    #[test]
    fn pair_measure_has_no_compact_components() {
        let e = estimate_cns_planar(&pair(), 10.0, 0.05, 20, 1).unwrap();
        assert!(e.records.iter().all(|r| r.compact == 0));
        assert_eq!(e.c_hat, 0.0);
        assert!(e.degenerate_measure);
    }

    #[test]
    fn summary_recomputes_from_records() {
        let m = uniform_circle(64).unwrap();
        let e = estimate_cns_planar(&m, 5.0, 0.05, 10, 3).unwrap();
        let again = EstimateResult::from_records(e.records.clone(), e.scale, 3, m.label());
        assert_eq!(again.c_hat.to_bits(), e.c_hat.to_bits());
        let manual = e.records.iter().map(|r| r.compact as f64).sum::<f64>() / 10.0 / 25.0;
        assert_eq!(manual.to_bits(), e.c_hat.to_bits());
        assert!(e.c_hat > 0.0);
    }

    #[test]
    fn stderr_halves_when_trials_quadruple() {
        let m = uniform_circle(16).unwrap();
        let small = estimate_cns_planar(&m, 5.0, 0.05, 100, 21).unwrap();
        let large = estimate_cns_planar(&m, 5.0, 0.05, 400, 22).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn torus_rerun_is_bit_identical() {
        let a = estimate_cns_torus(25, 40, 8, 9).unwrap();
        let b = estimate_cns_torus(25, 40, 8, 9).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.c_hat.to_bits(), b.c_hat.to_bits());
        assert!(matches!(estimate_cns_torus(3, 40, 8, 9), Err(Error::EmptyEigenspace(3))));
    }

    #[test]
    fn lowest_mode_has_no_contractible_components() {
        let e = estimate_cns_torus(1, 8, 30, 4).unwrap();
        assert_eq!(e.c_hat, 0.0);
        assert_eq!(e.boundary_rate, 2.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(estimate_cns_planar(&cilleruelo(), 5.0, 0.05, 1, 0).is_err());
        assert!(matches!(
            sweep_r(&cilleruelo(), &[5.0, 6.0], 0.05, 4, 0),
            Err(Error::InsufficientPoints)
        ));
        assert!(matches!(
            cilleruelo_growth_fit(&[1, 4], |_| 16, 4, 0, &GrowthTarget::cilleruelo()),
            Err(Error::InsufficientPoints)
        ));
        assert!(continuity_path(&cilleruelo(), &pair(), &[0.0, 1.2], 5.0, 0.05, 4, 0).is_err());
    }

    #[test]
    fn weighted_fit_recovers_exact_model() {
        let r = [10.0, 20.0, 40.0];
        let y: Vec<f64> = r.iter().map(|x| 0.6 * x * x - 1.5 * x).collect();
        let u: Vec<f64> = r.iter().map(|x| x * x).collect();
        let ([c, b], _) = weighted_ls2(&u, &r, &y, &[1.0, 2.0, 3.0]).unwrap();
        assert!((c - 0.6).abs() < 1e-12 && (b + 1.5).abs() < 1e-10);
    }

    #[test]
    fn fourier_scan_skips_mismatched_pairs() {
        let pairs = vec![(cilleruelo(), tilted_cilleruelo())];
        assert!(fourier_dependence_scan(&pairs, 5.0, 0.05, 4, 0, false).unwrap().is_empty());
        assert!(fourier_dependence_scan(&[], 5.0, 0.05, 4, 0, false).unwrap().is_empty());
    }

    #[test]
    fn mix_at_zero_reproduces_endpoint() {
        let a = cilleruelo();
        let b = uniform_circle(64).unwrap();
        let path = continuity_path(&a, &b, &[0.0, 0.5], 6.0, 0.05, 6, 11).unwrap();
        let direct = estimate_cns_planar(&a, 6.0, 0.05, 6, 11).unwrap();
        assert_eq!(path.points[0].estimate.records, direct.records);
    }
}
