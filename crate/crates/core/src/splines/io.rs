//! Plain-text patch files.
//!
//! ```text
//! # comment
//! dim 2
//! degree 2
//! knots 0 0 0 1 1 1
//! knots 0 0 0 0.5 1 1 1
//! points 12
//! x y w          (one control point per line, first direction fastest)
//! ```
//!
//! Each point line has `dim` coordinates followed by the weight.

use std::fmt::Write as _;

use super::knots::KnotVector;
use super::map::{ControlNet, GeometricMap};
use super::tensor::{TensorBasis, MAX_DIM};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_num<T: Real>(tok: &str, line: usize) -> std::result::Result<T, ParseError> {
    tok.parse::<f64>()
        .map(T::lit)
        .map_err(|_| err(line, format!("invalid number '{tok}'")))
}

pub fn parse_patch<T: Real>(text: &str) -> std::result::Result<GeometricMap<T>, ParseError> {
    let mut dim: Option<usize> = None;
    let mut degree: Option<usize> = None;
    let mut knots: Vec<Vec<T>> = Vec::new();
    let mut expected_points: Option<usize> = None;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut last_line = 0;
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let head = toks.next().unwrap_or("");
        if expected_points.is_some() {
            let d = dim.ok_or_else(|| err(line, "'dim' must precede points"))?;
            let vals: Vec<T> = content
                .split_whitespace()
                .map(|t| parse_num(t, line))
                .collect::<std::result::Result<_, _>>()?;
            if vals.len() != d + 1 {
                return Err(err(line, format!("expected {} values (coordinates + weight), found {}", d + 1, vals.len())));
            }
            let mut p = [T::zero(); MAX_DIM];
            p[..d].copy_from_slice(&vals[..d]);
            points.push(p);
            weights.push(vals[d]);
            continue;
        }
        match head {
            "dim" => {
                let d: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(line, "expected 'dim <1|2|3>'"))?;
                if !(1..=MAX_DIM).contains(&d) {
                    return Err(err(line, format!("unsupported dimension {d}")));
                }
                dim = Some(d);
            }
            "degree" => {
                degree = Some(
                    toks.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "expected 'degree <p>'"))?,
                );
            }
            "knots" => {
                let k: Vec<T> = toks.map(|t| parse_num(t, line)).collect::<std::result::Result<_, _>>()?;
                knots.push(k);
            }
            "points" => {
                expected_points = Some(
                    toks.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "expected 'points <count>'"))?,
                );
            }
            other => return Err(err(line, format!("unknown keyword '{other}'"))),
        }
    }
    let dim = dim.ok_or_else(|| err(last_line, "missing 'dim'"))?;
    let degree = degree.ok_or_else(|| err(last_line, "missing 'degree'"))?;
    if knots.len() != dim {
        return Err(err(last_line, format!("expected {dim} knot lines, found {}", knots.len())));
    }
    let n = expected_points.ok_or_else(|| err(last_line, "missing 'points'"))?;
    if points.len() != n {
        return Err(err(last_line, format!("declared {n} points, found {}", points.len())));
    }
    let kvs = knots
        .into_iter()
        .map(|k| KnotVector::new(k, degree))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| err(last_line, e.to_string()))?;
    let basis = TensorBasis::new(kvs).map_err(|e| err(last_line, e.to_string()))?;
    let net = ControlNet::new(points, weights).map_err(|e| err(last_line, e.to_string()))?;
    GeometricMap::new(basis, net).map_err(|e: Error| err(last_line, e.to_string()))
}

pub fn write_patch<T: Real>(map: &GeometricMap<T>) -> String {
    let mut s = String::new();
    let dim = map.dim();
    let _ = writeln!(s, "dim {dim}");
    let _ = writeln!(s, "degree {}", map.basis().degree());
    for kv in map.basis().directions() {
        let ks: Vec<String> = kv.knots().iter().map(|k| format!("{}", k.as_f64())).collect();
        let _ = writeln!(s, "knots {}", ks.join(" "));
    }
    let _ = writeln!(s, "points {}", map.net().len());
    for (p, w) in map.net().points.iter().zip(&map.net().weights) {
        let mut vals: Vec<String> = p[..dim].iter().map(|x| format!("{:?}", x.as_f64())).collect();
        vals.push(format!("{:?}", w.as_f64()));
        let _ = writeln!(s, "{}", vals.join(" "));
    }
    s
}
