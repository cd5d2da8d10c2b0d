//! Parsers for measure expressions and numeric lists given on the command line.

use std::fs;

use crate::error::{Error, Result};
use crate::lattice::spectral_measure_mu_n;
use crate::measure::{self, SpectralMeasure};

/// Help text listing the accepted measure expressions.
pub const MEASURE_FORMS: &str = "cilleruelo, tilted-cilleruelo, pair, uniform<k>, mu_n:<n>, \
orbit(<theta>), mix(<a>,<b>,<t>), file:<path>";

/// Parses a measure expression such as `uniform64` or `mix(cilleruelo,uniform64,0.3)`.
pub fn parse_measure(expr: &str) -> Result<SpectralMeasure> {
    let s = expr.trim();
    match s {
        "cilleruelo" => return Ok(measure::cilleruelo()),
        "tilted-cilleruelo" => return Ok(measure::tilted_cilleruelo()),
        "pair" => return Ok(measure::pair()),
        _ => {}
    }
    if let Some(k) = s.strip_prefix("uniform") {
        let k: usize = k
            .parse()
            .map_err(|_| unknown(s, "uniform<k> needs an integer atom count"))?;
        return measure::uniform_circle(k);
    }
    if let Some(n) = s.strip_prefix("mu_n:") {
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| unknown(s, "mu_n:<n> needs a non-negative integer"))?;
        return spectral_measure_mu_n(n);
    }
    if let Some(path) = s.strip_prefix("file:") {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidMeasure(format!("cannot read {path}: {e}")))?;
        return serde_json::from_str(&text)
            .map_err(|e| Error::InvalidMeasure(format!("{path}: {e}")));
    }
    if let Some(inner) = call_args(s, "orbit") {
        let theta = parse_number(inner.trim())
            .map_err(|_| unknown(s, "orbit(<theta>) needs an angle in radians"))?;
        return Ok(measure::symmetric_orbit(theta));
    }
    if let Some(inner) = call_args(s, "mix") {
        let parts = split_top_level(inner);
        if parts.len() != 3 {
            return Err(unknown(s, "mix needs exactly three arguments"));
        }
        let a = parse_measure(parts[0])?;
        let b = parse_measure(parts[1])?;
        let t = parse_number(parts[2].trim())
            .map_err(|_| unknown(s, "mixing weight must be a number"))?;
        return measure::mix(&a, &b, t);
    }
    Err(unknown(s, &format!("expected one of {MEASURE_FORMS}")))
}

fn unknown(expr: &str, hint: &str) -> Error {
    Error::InvalidMeasure(format!("'{expr}': {hint}"))
}

fn call_args<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}

/// Splits on commas not enclosed in parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_number(s: &str) -> std::result::Result<f64, ()> {
    let v: f64 = s.parse().map_err(|_| ())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(())
    }
}

/// Largest number of values a `a,b,...,c` range may expand to.
const MAX_RANGE: usize = 10_000;

/// Parses `1,2,5` or the arithmetic range form `0,0.1,...,1`.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let tokens: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = |t: &str| Error::Config(format!("'{t}' is not a number in list '{s}'"));
    if let Some(pos) = tokens.iter().position(|t| *t == "...") {
        if pos != 2 || tokens.len() != 4 {
            return Err(Error::Config(format!(
                "range '{s}' must have the form a,b,...,c"
            )));
        }
        let a = parse_number(tokens[0]).map_err(|_| bad(tokens[0]))?;
        let b = parse_number(tokens[1]).map_err(|_| bad(tokens[1]))?;
        let c = parse_number(tokens[3]).map_err(|_| bad(tokens[3]))?;
        let step = b - a;
        if step <= 0.0 || c < a {
            return Err(Error::Config(format!("range '{s}' must be increasing")));
        }
        let count = ((c - a) / step).round();
        if count > MAX_RANGE as f64 || (a + count * step - c).abs() > 1e-9 * c.abs().max(1.0) {
            return Err(Error::Config(format!(
                "range '{s}' does not reach {c} in steps of {step}"
            )));
        }
        return Ok((0..=count as usize)
            .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    tokens
        .iter()
        .map(|t| parse_number(t).map_err(|_| bad(t)))
        .collect()
}

/// Parses a `--pair "a;b"` argument.
pub fn parse_pair(s: &str) -> Result<(SpectralMeasure, SpectralMeasure)> {
    let (a, b) = s
        .split_once(';')
        .ok_or_else(|| Error::Config(format!("pair '{s}' must have the form <a>;<b>")))?;
    Ok((parse_measure(a)?, parse_measure(b)?))
}
