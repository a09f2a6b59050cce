//! Dataset ingestion and export.
//!
//! Delimited text, one experiment per line:
//!
//! ```text
//! static:   x1,...,xd,s
//! dynamic:  x1,...,xd,s,A,B
//! ```
//!
//! Fields may be separated by commas, tabs or spaces. A first line whose
//! first token is not numeric is treated as a header; blank lines and lines
//! starting with `#` are skipped.
//!
//! JSON lines, one object per line: `{"x": [..], "s": 0|1}` with optional
//! `"a"` and `"b"` (defaulting to 1 and 0).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamic::{Coefficients, DynamicDataset, DynamicExperiment};
use crate::error::{Error, Result};
use crate::neighbor::check_point;
use crate::static_sbp::{outcome_from_f64, StaticDataset, StaticExperiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Delimited,
    JsonLines,
}

impl Format {
    /// `.jsonl` / `.ndjson` select JSON lines; anything else is delimited.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Format::JsonLines,
            _ => Format::Delimited,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    x: Vec<f64>,
    s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
}

/// A parsed line: `(line number, coordinates, outcome, optional (A, B))`.
type Row = (usize, Vec<f64>, bool, Option<(f64, f64)>);

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split([',', '\t', ' ', ';'])
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `extra` is the number of columns after the coordinates (1 static, 3 dynamic).
fn parse_delimited(text: &str, extra: usize) -> Result<(usize, Vec<Row>)> {
    let mut rows = Vec::new();
    let mut dim: Option<usize> = None;
    let mut first = true;
    for (line_no, line) in content_lines(text) {
        let fields = split_fields(line);
        if first {
            first = false;
            if fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        if fields.len() <= extra {
            return Err(parse_err(
                line_no,
                format!("expected at least {} fields", extra + 1),
            ));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let d = values.len() - extra;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(parse_err(
                    line_no,
                    format!("expected {expected} coordinates, found {d}"),
                ));
            }
            _ => {}
        }
        let x = values[..d].to_vec();
        let success = outcome_from_f64(values[d]).map_err(|e| parse_err(line_no, e.to_string()))?;
        let coef = (extra == 3).then(|| (values[d + 1], values[d + 2]));
        rows.push((line_no, x, success, coef));
    }
    Ok((dim.unwrap_or(1), rows))
}

fn parse_json_lines(text: &str) -> Result<(usize, Vec<Row>)> {
    let mut rows = Vec::new();
    let mut dim: Option<usize> = None;
    for (line_no, line) in content_lines(text) {
        let rec: Record =
            serde_json::from_str(line).map_err(|e| parse_err(line_no, e.to_string()))?;
        match dim {
            None => dim = Some(rec.x.len()),
            Some(expected) if expected != rec.x.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {expected} coordinates, found {}", rec.x.len()),
                ));
            }
            _ => {}
        }
        let success = outcome_from_f64(rec.s).map_err(|e| parse_err(line_no, e.to_string()))?;
        let coef = match (rec.a, rec.b) {
            (None, None) => None,
            (a, b) => Some((a.unwrap_or(1.0), b.unwrap_or(0.0))),
        };
        rows.push((line_no, rec.x, success, coef));
    }
    Ok((dim.unwrap_or(1), rows))
}

pub fn parse_static(text: &str, format: Format) -> Result<StaticDataset> {
    let (dim, rows) = match format {
        Format::Delimited => parse_delimited(text, 1)?,
        Format::JsonLines => parse_json_lines(text)?,
    };
    let mut experiments = Vec::with_capacity(rows.len());
    for (line, x, success, coef) in rows {
        check_point(dim, &x).map_err(|e| parse_err(line, e.to_string()))?;
        if coef.is_some() {
            return Err(parse_err(
                line,
                "contextual coefficients in a static dataset",
            ));
        }
        experiments.push(StaticExperiment { x, success });
    }
    StaticDataset::new(dim, &experiments)
}

pub fn parse_dynamic(text: &str, format: Format) -> Result<DynamicDataset> {
    let (dim, rows) = match format {
        Format::Delimited => parse_delimited(text, 3)?,
        Format::JsonLines => parse_json_lines(text)?,
    };
    let mut experiments = Vec::with_capacity(rows.len());
    for (line, x, success, coef) in rows {
        check_point(dim, &x).map_err(|e| parse_err(line, e.to_string()))?;
        let (a, b) = coef.unwrap_or((1.0, 0.0));
        let coef = Coefficients::new(a, b).map_err(|e| parse_err(line, e.to_string()))?;
        experiments.push(DynamicExperiment { x, success, coef });
    }
    DynamicDataset::new(dim, &experiments)
}

fn header(dim: usize, tail: &str) -> String {
    let mut h = if dim == 1 {
        "x".to_string()
    } else {
        (1..=dim)
            .map(|k| format!("x{k}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    h.push(',');
    h.push_str(tail);
    h.push('\n');
    h
}

pub fn static_to_csv(data: &StaticDataset) -> String {
    let mut out = header(data.dim(), "s");
    for e in data.experiments() {
        for v in &e.x {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", e.success as u8);
    }
    out
}

pub fn dynamic_to_csv(data: &DynamicDataset) -> String {
    let mut out = header(data.dim(), "s,A,B");
    for e in data.experiments() {
        for v in &e.x {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{},{}", e.success as u8, e.coef.a, e.coef.b);
    }
    out
}

pub fn dynamic_to_json_lines(data: &DynamicDataset) -> String {
    let mut out = String::new();
    for e in data.experiments() {
        let rec = Record {
            x: e.x,
            s: e.success as u8 as f64,
            a: Some(e.coef.a),
            b: Some(e.coef.b),
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}
