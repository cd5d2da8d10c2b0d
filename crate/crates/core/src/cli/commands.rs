use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use super::output::{resolve_dir, RunDir};
use super::expr::{parse_list, parse_measure, parse_pair};
use super::{Cli, Command, EstimateArgs, LatticeArgs, SweepArgs, SweepKind, TorusArgs};
use crate::error::{Error, Result};
use crate::estimation::{
    check_trials, cilleruelo_growth_fit, continuity_path, estimate_cns_planar_with,
    estimate_cns_torus, fourier_dependence_scan, interval_report, sweep_r, EstimateResult,
    GrowthTarget, PlanarOptions, SweepResult,
};
use crate::lattice::{
    r2, search_filtered, spectral_measure_mu_n, sum_two_squares_reps, write_search_csv, SearchHit,
};
use crate::measure::{cilleruelo, uniform_circle};
use crate::synthesis::{check_planar, check_torus, default_torus_size};

const PLANAR_NOTE: &str = "c_hat counts nodal components lying strictly inside B(0,R), divided by R^2; \
components meeting the circle |x|=R are excluded and reported as boundary_rate (mean per unit R)";
const TORUS_NOTE: &str = "c_hat counts contractible nodal components times pi/n; \
components wrapping around the torus are excluded and reported as boundary_rate (mean per trial)";

pub(super) fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => estimate(cli, a),
        Command::Torus(a) => torus(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Lattice(a) => lattice(a),
    }
}

fn open_run(cli: &Cli, experiment: &str, seed: u64, config: Value) -> Result<RunDir> {
    let dir = resolve_dir(cli.out.as_deref(), experiment, seed);
    RunDir::create(dir, experiment, seed, config)
}

/// Records a failed run in its manifest, keeping trials completed before an abort.
fn settle<T>(run: &mut RunDir, result: Result<T>) -> Result<T> {
    match result {
        Ok(v) => Ok(v),
        Err(e) => {
            if let Error::Aborted { completed, .. } = &e {
                run.write_file("trials.jsonl", |w| write_records(w, completed.iter(), None))?;
            }
            run.fail(&e.to_string())?;
            Err(e)
        }
    }
}

fn write_records<'a, W: Write>(
    mut w: W,
    records: impl Iterator<Item = &'a crate::TrialRecord>,
    parameter: Option<f64>,
) -> Result<()> {
    for r in records {
        let mut v = serde_json::to_value(r)?;
        if let (Some(p), Value::Object(obj)) = (parameter, &mut v) {
            obj.insert("parameter".into(), json!(p));
        }
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn estimate_summary(experiment: &str, est: &EstimateResult, note: &str) -> Result<Value> {
    let mut v = serde_json::to_value(est)?;
    if let Value::Object(obj) = &mut v {
        obj.insert("experiment".into(), json!(experiment));
        obj.insert("notes".into(), json!([note]));
        obj.insert("records".into(), serde_json::to_value(&est.records)?);
    }
    Ok(v)
}

fn sweep_trials(run: &mut RunDir, sweep: &SweepResult) -> Result<()> {
    run.write_file("trials.jsonl", |w| {
        for p in &sweep.points {
            write_records(&mut *w, p.estimate.records.iter(), Some(p.parameter))?;
        }
        Ok(())
    })?;
    run.write_file("sweep.csv", |w| Ok(sweep.write_csv(w)?))
}

fn estimate(cli: &Cli, a: &EstimateArgs) -> Result<()> {
    let m = parse_measure(&a.measure)?;
    check_trials(a.trials)?;
    check_planar(a.radius, a.step)?;
    let config = json!({
        "measure": a.measure,
        "measure_label": m.label(),
        "R": a.radius,
        "h": a.step,
        "trials": a.trials,
        "seed": a.seed,
        "flips": a.flips,
    });
    let mut run = open_run(cli, "estimate", a.seed, config)?;
    let options = PlanarOptions {
        with_flips: a.flips,
        ..Default::default()
    };
    let result = estimate_cns_planar_with(&m, a.radius, a.step, a.trials, a.seed, options);
    let est = settle(&mut run, result)?;
    run.write_file("trials.jsonl", |w| est.write_trial_log(w))?;
    run.write_json("summary.json", &estimate_summary("estimate", &est, PLANAR_NOTE)?)?;
    if est.degenerate_measure {
        run.diagnostic("degenerate_measure", "atoms lie on a line; the zero set is a union of parallel lines");
    }
    run.finish()?;

    println!(
        "c_hat = {:.6} ± {:.6}  ({} trials, {}, R = {}, h = {})",
        est.c_hat, est.stderr, est.trials, est.measure_label, a.radius, a.step
    );
    println!("boundary components per unit R: {:.4}", est.boundary_rate);
    if let Some(f) = est.mean_flips {
        println!("mean flips: {f:.3}");
    }
    if est.degenerate_measure {
        println!("note: degenerate measure (atoms on a line)");
    }
    println!("results in {}", run.path().display());
    Ok(())
}

fn torus(cli: &Cli, a: &TorusArgs) -> Result<()> {
    let size = a.size.unwrap_or_else(|| default_torus_size(a.n));
    check_torus(a.n, size)?;
    check_trials(a.trials)?;
    let config = json!({
        "n": a.n,
        "N": size,
        "r2": r2(a.n),
        "trials": a.trials,
        "seed": a.seed,
    });
    let mut run = open_run(cli, "torus", a.seed, config)?;
    let result = estimate_cns_torus(a.n, size, a.trials, a.seed);
    let est = settle(&mut run, result)?;
    run.write_file("trials.jsonl", |w| est.write_trial_log(w))?;
    run.write_json("summary.json", &estimate_summary("torus", &est, TORUS_NOTE)?)?;
    run.diagnostic("mean_wrapping_components", est.boundary_rate);
    run.finish()?;

    println!(
        "c_hat = {:.6} ± {:.6}  ({} trials, n = {}, r2 = {}, N = {})",
        est.c_hat,
        est.stderr,
        est.trials,
        a.n,
        r2(a.n),
        size
    );
    println!(
        "mean contractible components: {:.3}; wrapping components: {:.3} per trial (not in c_hat)",
        est.mean_count, est.boundary_rate
    );
    println!("results in {}", run.path().display());
    Ok(())
}

fn single_radius(list: &[f64]) -> Result<f64> {
    match list {
        [r] => Ok(*r),
        _ => Err(Error::Config(format!(
            "this sweep takes a single --R value (got {})",
            list.len()
        ))),
    }
}

fn check_path(ts: &[f64]) -> Result<()> {
    if ts.len() < 2 {
        return Err(Error::Config("a path needs at least two --t values".into()));
    }
    if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Config("--t values must lie in [0, 1]".into()));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("--t values must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a, R: Serialize> {
    experiment: &'a str,
    #[serde(flatten)]
    sweep: &'a SweepResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<R>,
    notes: Vec<&'a str>,
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    check_trials(a.trials)?;
    let default_r = if a.kind == SweepKind::Radius { "20,40,80" } else { "40" };
    let radii = parse_list(a.radius.as_deref().unwrap_or(default_r))?;
    for &r in &radii {
        check_planar(r, a.step)?;
    }
    let mut config = json!({
        "h": a.step,
        "trials": a.trials,
        "seed": a.seed,
    });
    let echo = |config: &mut Value, key: &str, v: Value| {
        config.as_object_mut().expect("object").insert(key.into(), v);
    };
    match a.kind {
        SweepKind::Radius => {
            let m = parse_measure(&a.measure)?;
            if radii.len() < 3 {
                return Err(Error::Config("an R sweep needs at least three radii".into()));
            }
            if radii.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("--R values must be strictly increasing".into()));
            }
            echo(&mut config, "kind", json!("R"));
            echo(&mut config, "measure", json!(a.measure));
            echo(&mut config, "R", json!(radii));
            let mut run = open_run(cli, "sweep-R", a.seed, config)?;
            let result = sweep_r(&m, &radii, a.step, a.trials, a.seed);
            let s = settle(&mut run, result)?;
            sweep_trials(&mut run, &s)?;
            let summary = SweepSummary::<()> {
                experiment: "sweep-R",
                sweep: &s,
                report: None,
                notes: vec![PLANAR_NOTE],
            };
            run.write_json("summary.json", &summary)?;
            run.finish()?;
            print_points(&s);
            if let Some(crate::estimation::SweepFit::Remainder(fit)) = &s.fit {
                println!(
                    "fit E[N] = c·R² + b·R: c = {:.6} ± {:.6}, b = {:.4} ± {:.4}",
                    fit.c, fit.c_stderr, fit.b, fit.b_stderr
                );
                for (p, (res, se)) in s.points.iter().zip(fit.residuals.iter().zip(&fit.count_stderr)) {
                    println!("  R = {:>6}: residual {:+.3} ({:.2} stderr)", p.parameter, res, res / se);
                }
            }
            println!("results in {}", run.path().display());
        }
        SweepKind::Continuity | SweepKind::Interval => {
            let ts = parse_list(&a.t)?;
            check_path(&ts)?;
            let radius = single_radius(&radii)?;
            let (from, to, experiment) = if a.kind == SweepKind::Interval {
                (cilleruelo(), uniform_circle(64)?, "sweep-interval")
            } else {
                (parse_measure(&a.from)?, parse_measure(&a.measure)?, "sweep-continuity")
            };
            echo(&mut config, "kind", json!(&experiment[6..]));
            echo(&mut config, "from", json!(from.label()));
            echo(&mut config, "measure", json!(to.label()));
            echo(&mut config, "t", json!(ts));
            echo(&mut config, "R", json!(radius));
            let mut run = open_run(cli, experiment, a.seed, config)?;
            let result = continuity_path(&from, &to, &ts, radius, a.step, a.trials, a.seed);
            let mut s = settle(&mut run, result)?;
            if a.kind == SweepKind::Interval {
                s.kind = "interval".into();
            }
            sweep_trials(&mut run, &s)?;
            let report = json!({
                "jumps": s.adjacent_jumps(),
                "range": s.range(),
                "interval": interval_report(&s),
            });
            let summary = SweepSummary {
                experiment,
                sweep: &s,
                report: Some(&report),
                notes: vec![PLANAR_NOTE],
            };
            run.write_json("summary.json", &summary)?;
            run.finish()?;
            print_points(&s);
            println!("range of c_hat along the path: {:.6}", s.range());
            println!("results in {}", run.path().display());
        }
        SweepKind::Fourier => {
            if a.pairs.is_empty() {
                return Err(Error::Config("a Fourier scan needs at least one --pair".into()));
            }
            let pairs = a
                .pairs
                .iter()
                .map(|p| parse_pair(p))
                .collect::<Result<Vec<_>>>()?;
            let radius = single_radius(&radii)?;
            echo(&mut config, "kind", json!("fourier"));
            echo(&mut config, "pairs", json!(a.pairs));
            echo(&mut config, "match_eighth", json!(a.match_eighth));
            echo(&mut config, "R", json!(radius));
            let mut run = open_run(cli, "sweep-fourier", a.seed, config)?;
            let result =
                fourier_dependence_scan(&pairs, radius, a.step, a.trials, a.seed, a.match_eighth);
            let reports = settle(&mut run, result)?;
            run.write_file("fourier.csv", |w| {
                writeln!(w, "a,b,coefficient4,c_hat_a,c_hat_b,difference,combined_stderr,flagged")?;
                for r in &reports {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        csv_field(&r.a),
                        csv_field(&r.b),
                        r.coefficient4,
                        r.c_hat_a,
                        r.c_hat_b,
                        r.difference,
                        r.combined_stderr,
                        r.flagged
                    )?;
                }
                Ok(())
            })?;
            run.write_json(
                "summary.json",
                &json!({
                    "experiment": "sweep-fourier",
                    "kind": "fourier",
                    "pairs": reports,
                    "skipped": pairs.len() - reports.len(),
                    "notes": [PLANAR_NOTE],
                }),
            )?;
            run.finish()?;
            for r in &reports {
                println!(
                    "{} vs {}: {:.6} vs {:.6}, difference {:.6} ({:.2} combined stderr){}",
                    r.a,
                    r.b,
                    r.c_hat_a,
                    r.c_hat_b,
                    r.difference,
                    r.difference / r.combined_stderr.max(f64::MIN_POSITIVE),
                    if r.flagged { "  FLAGGED" } else { "" }
                );
            }
            if reports.len() < pairs.len() {
                println!(
                    "{} pair(s) skipped: Fourier coefficients differ",
                    pairs.len() - reports.len()
                );
            }
            println!("results in {}", run.path().display());
        }
        SweepKind::Growth => {
            let target = GrowthTarget {
                measure: parse_measure(&a.target)?,
                max_distance: a.max_distance,
                max_harmonic: a.harmonics,
            };
            if a.nmin > a.nmax || a.nmax == 0 {
                return Err(Error::Config(format!("bad range [{}, {}]", a.nmin, a.nmax)));
            }
            let hits = search_filtered(
                &target.measure,
                a.nmin,
                a.nmax,
                a.harmonics,
                usize::MAX,
                |h| h.distance <= a.max_distance,
            )?;
            let ns = spread_in_log(&hits, a.points);
            if ns.len() < 3 {
                return Err(Error::Config(format!(
                    "only {} n in [{}, {}] lie within {} of {}; need at least 3",
                    ns.len(),
                    a.nmin,
                    a.nmax,
                    a.max_distance,
                    target.measure.label()
                )));
            }
            echo(&mut config, "kind", json!("growth"));
            echo(&mut config, "target", json!(target.measure.label()));
            echo(&mut config, "max_distance", json!(a.max_distance));
            echo(&mut config, "harmonics", json!(a.harmonics));
            echo(&mut config, "n", json!(ns));
            echo(
                &mut config,
                "N",
                json!(ns.iter().map(|&n| default_torus_size(n)).collect::<Vec<_>>()),
            );
            let mut run = open_run(cli, "sweep-growth", a.seed, config)?;
            let result = cilleruelo_growth_fit(&ns, default_torus_size, a.trials, a.seed, &target);
            let s = settle(&mut run, result)?;
            sweep_trials(&mut run, &s)?;
            let summary = SweepSummary::<()> {
                experiment: "sweep-growth",
                sweep: &s,
                report: None,
                notes: vec![TORUS_NOTE],
            };
            run.write_json("summary.json", &summary)?;
            run.finish()?;
            print_points(&s);
            if let Some(crate::estimation::SweepFit::PowerLaw(fit)) = &s.fit {
                println!(
                    "mean total components ~ n^{:.3} (95% interval {:.3} to {:.3})",
                    fit.exponent, fit.ci95.0, fit.ci95.1
                );
            }
            if let Some(label) = &s.label {
                println!("{label}");
            }
            println!("results in {}", run.path().display());
        }
    }
    Ok(())
}

/// Up to `count` hits with `n` spread evenly on a log scale, in increasing `n`.
fn spread_in_log(hits: &[SearchHit], count: usize) -> Vec<u64> {
    let mut ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() <= count {
        return ns;
    }
    if count < 2 {
        ns.truncate(count);
        return ns;
    }
    let (lo, hi) = ((ns[0] as f64).ln(), (ns[ns.len() - 1] as f64).ln());
    let mut picked: Vec<u64> = Vec::with_capacity(count);
    for i in 0..count {
        let target = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        let best = ns
            .iter()
            .filter(|n| !picked.contains(n))
            .min_by(|a, b| {
                ((**a as f64).ln() - target)
                    .abs()
                    .total_cmp(&((**b as f64).ln() - target).abs())
            })
            .copied();
        picked.extend(best);
    }
    picked.sort_unstable();
    picked
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn print_points(s: &SweepResult) {
    for p in &s.points {
        println!(
            "  {:>8}: c_hat = {:.6} ± {:.6}",
            p.parameter, p.estimate.c_hat, p.estimate.stderr
        );
    }
}

/// Rounds cancellation noise in exact-zero coefficients.
fn snap(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

fn lattice(a: &LatticeArgs) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match (a.n, &a.search) {
        (Some(n), None) => {
            if n == 0 {
                return Err(Error::Config("n must be positive".into()));
            }
            let reps = sum_two_squares_reps(n);
            writeln!(out, "n = {n}")?;
            writeln!(out, "r2 = {}", reps.r2())?;
            if reps.is_empty() {
                writeln!(out, "{n} is not a sum of two squares")?;
                return Ok(());
            }
            writeln!(out, "points:")?;
            for [x, y] in &reps.points {
                writeln!(out, "  ({x}, {y})")?;
            }
            let mu = spectral_measure_mu_n(n)?;
            writeln!(out, "fourier coefficients of {}:", mu.label())?;
            writeln!(out, "k,re,im")?;
            for k in 0..=a.harmonics as i32 {
                let c = mu.fourier_coefficient(k)?;
                writeln!(out, "{k},{},{}", snap(c.re), snap(c.im))?;
            }
        }
        (None, Some(expr)) => {
            let target = parse_measure(expr)?;
            if a.nmin > a.nmax || a.nmax == 0 {
                return Err(Error::Config(format!("bad range [{}, {}]", a.nmin, a.nmax)));
            }
            if a.top == 0 {
                return Err(Error::Config("--top must be positive".into()));
            }
            let hits = search_filtered(&target, a.nmin, a.nmax, a.harmonics, a.top, |_| true)?;
            write_search_csv(&mut out, &hits)?;
        }
        _ => {
            return Err(Error::Config(
                "lattice needs either --n or --search".into(),
            ))
        }
    }
    Ok(())
}
