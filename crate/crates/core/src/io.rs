//! Text formats: instance files (distribution + tabulated class), labeled
//! sample CSV, Gram/spectrum CSV, curve CSV, flat key-value config files,
//! and JSON export of reports.
//!
//! Instance file, one record per line, `#` starts a comment:
//!
//! ```text
//! point  <id> <mass> [<label ±1>]
//! range  <lo> <hi>
//! function <name> <v1> <v2> ... <vk>
//! ```
//!
//! Values are listed in the order the points were declared. Labeled sample
//! CSV has a header and one `x,label` row per observation, where `x` is a
//! point id or a numeric one-dimensional feature and `label` is `+1`/`-1`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::empirical::{DiscreteDistribution, TabulatedClass};
use crate::error::{Error, Result};
use crate::real::Real;

/// A parsed instance file.
#[derive(Debug, Clone)]
pub struct Instance<R: Real> {
    pub dist: DiscreteDistribution<R>,
    pub class: TabulatedClass<R>,
}

pub fn parse_instance<R: Real>(text: &str) -> Result<Instance<R>> {
    let mut ids = Vec::new();
    let mut masses = Vec::new();
    let mut labels: Vec<Option<i8>> = Vec::new();
    let mut range: Option<(R, R)> = None;
    let mut names = Vec::new();
    let mut rows: Vec<Vec<R>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let loc = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
        match keyword {
            "point" => {
                let id = tokens
                    .next()
                    .ok_or_else(|| loc("point needs an id".into()))?
                    .to_string();
                let mass: f64 = tokens
                    .next()
                    .ok_or_else(|| loc("point needs a mass".into()))?
                    .parse()
                    .map_err(|e| loc(format!("bad mass: {e}")))?;
                let label = match tokens.next() {
                    None => None,
                    Some("+1") | Some("1") => Some(1),
                    Some("-1") => Some(-1),
                    Some(other) => return Err(loc(format!("bad label {other}; use +1 or -1"))),
                };
                ids.push(id);
                masses.push(R::of(mass));
                labels.push(label);
            }
            "range" => {
                let lo: f64 = tokens
                    .next()
                    .ok_or_else(|| loc("range needs two bounds".into()))?
                    .parse()
                    .map_err(|e| loc(format!("bad range: {e}")))?;
                let hi: f64 = tokens
                    .next()
                    .ok_or_else(|| loc("range needs two bounds".into()))?
                    .parse()
                    .map_err(|e| loc(format!("bad range: {e}")))?;
                range = Some((R::of(lo), R::of(hi)));
            }
            "function" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| loc("function needs a name".into()))?
                    .to_string();
                let mut values = Vec::new();
                for tok in tokens {
                    let v: f64 = tok.parse().map_err(|e| loc(format!("bad value: {e}")))?;
                    values.push(R::of(v));
                }
                names.push(name);
                rows.push(values);
            }
            other => return Err(loc(format!("unknown record type {other}"))),
        }
    }
    if ids.is_empty() {
        return Err(Error::Parse("instance declares no points".into()));
    }
    if rows.is_empty() {
        return Err(Error::Parse("instance declares no functions".into()));
    }
    let label_vec = if labels.iter().all(Option::is_some) {
        Some(labels.into_iter().map(|l| l.unwrap()).collect())
    } else if labels.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::Parse("either every point carries a label or none does".into()));
    };
    let dist = DiscreteDistribution::new(ids, masses, label_vec)?;
    if rows.iter().any(|r| r.len() != dist.len()) {
        return Err(Error::Parse(format!(
            "every function needs one value per point ({} points)",
            dist.len()
        )));
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        let lo = rows
            .iter()
            .flat_map(|r| r.iter())
            .copied()
            .fold(R::infinity(), |m, v| m.min(v));
        let hi = rows
            .iter()
            .flat_map(|r| r.iter())
            .copied()
            .fold(R::neg_infinity(), |m, v| m.max(v));
        (lo, hi)
    });
    let class = TabulatedClass::new(rows, lo, hi, Some(names))?;
    Ok(Instance { dist, class })
}

/// One labeled observation: a ground-point id or a raw 1-D feature.
#[derive(Debug, Clone, PartialEq)]
pub enum XRef<R: Real> {
    PointId(String),
    Feature(R),
}

pub fn parse_labeled_csv<R: Real>(text: &str) -> Result<Vec<(XRef<R>, i8)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (lineno == 0 && line.to_lowercase().starts_with("x")) {
            continue;
        }
        let mut parts = line.split(',');
        let x = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("line {}: missing x", lineno + 1)))?
            .trim();
        let label = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("line {}: missing label", lineno + 1)))?
            .trim();
        let label = match label {
            "+1" | "1" => 1,
            "-1" => -1,
            other => {
                return Err(Error::Parse(format!(
                    "line {}: label {other} must be +1 or -1",
                    lineno + 1
                )))
            }
        };
        let xref = match x.parse::<f64>() {
            Ok(v) => XRef::Feature(R::of(v)),
            Err(_) => XRef::PointId(x.to_string()),
        };
        out.push((xref, label));
    }
    if out.is_empty() {
        return Err(Error::Parse("labeled sample is empty".into()));
    }
    Ok(out)
}

/// Square numeric CSV (no header) for explicit kernel tables.
pub fn parse_matrix_csv<R: Real>(text: &str) -> Result<Vec<Vec<R>>> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<R> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map(R::of)
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix is empty".into()));
    }
    Ok(rows)
}

/// One numeric value per line (optional `eigenvalue` header).
pub fn parse_spectrum_csv<R: Real>(text: &str) -> Result<Vec<R>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (lineno == 0 && line.to_lowercase().starts_with("eigen")) {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        out.push(R::of(v));
    }
    if out.is_empty() {
        return Err(Error::Parse("spectrum is empty".into()));
    }
    Ok(out)
}

/// `r,psi` rows with a header.
pub fn parse_curve_csv<R: Real>(text: &str) -> Result<Vec<(R, R)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (lineno == 0 && line.to_lowercase().starts_with("r")) {
            continue;
        }
        let mut parts = line.split(',');
        let r: f64 = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let v: f64 = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("line {}: missing psi value", lineno + 1)))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        out.push((R::of(r), R::of(v)));
    }
    if out.is_empty() {
        return Err(Error::Parse("curve is empty".into()));
    }
    Ok(out)
}

/// Curve export: `r,psi` rows with a header, one row per grid point.
pub fn curve_to_csv<R: Real>(points: &[(R, R)]) -> String {
    let mut out = String::from("r,psi\n");
    for (r, v) in points {
        out.push_str(&format!("{r},{v}\n"));
    }
    out
}

/// Flat `key = value` configuration text; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected key = value", lineno + 1))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Pretty JSON with a trailing newline; map keys are ordered, so identical
/// inputs serialize byte-identically.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}
