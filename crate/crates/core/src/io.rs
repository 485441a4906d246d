//! Plain-text formats.
//!
//! `fieldv1`: header `fieldv1 n m_1 .. m_n a_1 b_1 .. a_n b_n`, then the node
//! values in row-major order (last axis fastest), whitespace separated, with
//! `inf` for `+∞`.
//!
//! `curvev1`: header `curvev1 n V`, then `V` lines of `n` coordinates. A file
//! may hold several curves separated by `---` lines.

use std::fmt::Write as _;

use crate::curve::{Curve, CurveFamily};
use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField};
use crate::grid::BoxGrid;

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => parse_err(line, format!("bad number {tok:?}")),
    }
}

/// Tokens with their 1-based line numbers, `#` comments stripped.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().flat_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        l.split_whitespace().map(move |t| (i + 1, t))
    })
}

pub fn write_field(f: &ScalarField) -> String {
    let g = f.grid();
    let mut s = format!("fieldv1 {}", g.dim());
    for m in g.counts() {
        write!(s, " {m}").unwrap();
    }
    for k in 0..g.dim() {
        write!(
            s,
            " {} {}",
            fmt_value(g.lower()[k]),
            fmt_value(g.upper()[k])
        )
        .unwrap();
    }
    s.push('\n');
    let row = *g.counts().last().expect("grid has an axis");
    for chunk in f.values().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|&v| fmt_value(v)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_field(text: &str) -> Result<ScalarField> {
    let mut it = tokens(text);
    let Some((l0, magic)) = it.next() else {
        return parse_err(1, "empty field file");
    };
    if magic != "fieldv1" {
        return parse_err(l0, format!("expected 'fieldv1', got {magic:?}"));
    }
    let mut next = |what: &str| {
        it.next().ok_or_else(|| Error::Parse {
            line: l0,
            message: format!("missing {what}"),
        })
    };
    let (ln, tok) = next("dimension")?;
    let n: usize = tok.parse().map_err(|_| Error::Parse {
        line: ln,
        message: format!("bad dimension {tok:?}"),
    })?;
    if !(1..=3).contains(&n) {
        return parse_err(ln, format!("dimension must be 1, 2 or 3, got {n}"));
    }
    let mut counts = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, tok) = next("node count")?;
        counts.push(tok.parse::<usize>().map_err(|_| Error::Parse {
            line: ln,
            message: format!("bad count {tok:?}"),
        })?);
    }
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let (ln, tok) = next("lower bound")?;
        lower.push(parse_value(tok, ln)?);
        let (ln, tok) = next("upper bound")?;
        upper.push(parse_value(tok, ln)?);
    }
    let grid = BoxGrid::new(lower, upper, counts).map_err(|e| Error::Parse {
        line: l0,
        message: e.to_string(),
    })?;
    let mut values = Vec::with_capacity(grid.len());
    let mut last_line = l0;
    for (ln, tok) in it {
        values.push(parse_value(tok, ln)?);
        last_line = ln;
    }
    if values.len() != grid.len() {
        return parse_err(
            last_line,
            format!("expected {} values, found {}", grid.len(), values.len()),
        );
    }
    let kind = if values.iter().all(|v| *v >= 0.0) {
        FieldKind::Nonneg
    } else {
        FieldKind::Signed
    };
    ScalarField::new(grid, values, kind).map_err(|e| Error::Parse {
        line: l0,
        message: e.to_string(),
    })
}

pub fn write_curves(curves: &[Curve]) -> String {
    let mut s = String::new();
    for (i, c) in curves.iter().enumerate() {
        if i > 0 {
            s.push_str("---\n");
        }
        writeln!(s, "curvev1 {} {}", c.dim(), c.vertices().len()).unwrap();
        for v in c.vertices() {
            let line: Vec<String> = v.iter().map(|&x| fmt_value(x)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
    }
    s
}

pub fn read_curves(text: &str, tag: impl Into<String>) -> Result<CurveFamily> {
    let mut curves = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()));
    while let Some((ln, header)) = lines.by_ref().find(|(_, l)| !l.is_empty() && *l != "---") {
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "curvev1" {
            return parse_err(ln, format!("expected 'curvev1 n V', got {header:?}"));
        }
        let n: usize = parts[1].parse().map_err(|_| Error::Parse {
            line: ln,
            message: "bad dimension".into(),
        })?;
        let v: usize = parts[2].parse().map_err(|_| Error::Parse {
            line: ln,
            message: "bad vertex count".into(),
        })?;
        let mut verts = Vec::with_capacity(v);
        while verts.len() < v {
            let Some((pl, l)) = lines.next() else {
                return parse_err(ln, format!("curve declares {v} vertices, file ended"));
            };
            if l.is_empty() {
                continue;
            }
            if l == "---" {
                return parse_err(
                    pl,
                    format!("curve declares {v} vertices, found {}", verts.len()),
                );
            }
            let p = l
                .split_whitespace()
                .map(|t| parse_value(t, pl))
                .collect::<Result<Vec<f64>>>()?;
            if p.len() != n {
                return parse_err(pl, format!("expected {n} coordinates, got {}", p.len()));
            }
            verts.push(p);
        }
        curves.push(Curve::new(verts).map_err(|e| Error::Parse {
            line: ln,
            message: e.to_string(),
        })?);
    }
    Ok(CurveFamily::new(curves, tag))
}
