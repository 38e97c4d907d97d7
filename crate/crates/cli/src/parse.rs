//! Parsers for the list syntaxes accepted on the command line.

use crate::exit::usage;
use anyhow::Result;

fn number(s: &str, what: &str) -> Result<f64> {
    let t = s.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| usage(format!("{what}: `{t}` is not a finite number")))
}

fn items(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').filter(|p| !p.trim().is_empty())
}

/// `a:b` with both ends finite.
pub fn pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("{what}: expected `a:b`, got `{}`", s.trim())))?;
    Ok((number(a, what)?, number(b, what)?))
}

/// `a:b,a:b,...`. Only the syntax is checked here; bound validity is left to
/// the model constructors.
pub fn intervals(s: &str, what: &str) -> Result<Vec<(f64, f64)>> {
    let v: Vec<(f64, f64)> = items(s).map(|p| pair(p, what)).collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(usage(format!("{what}: no intervals given")));
    }
    Ok(v)
}

pub fn numbers(s: &str, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = items(s).map(|p| number(p, what)).collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(usage(format!("{what}: empty list")));
    }
    Ok(v)
}

pub fn counts(s: &str, what: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = items(s)
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("{what}: `{}` is not a count", p.trim())))
        })
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(usage(format!("{what}: empty list")));
    }
    Ok(v)
}

pub fn names(s: &str) -> Vec<String> {
    items(s).map(|p| p.trim().to_string()).collect()
}
