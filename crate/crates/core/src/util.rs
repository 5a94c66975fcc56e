//! Small shared helpers: deterministic summation, least-squares fits in
//! log-log coordinates, complex-number parsing/formatting for the CLI, and
//! CSV emission with a fixed float format so identical runs diff byte-equal.

use crate::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Pairwise (tree) summation; deterministic for a fixed input order and
/// independent of chunking used by callers.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

pub fn pairwise_sum_f64(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum_f64(&values[..mid]) + pairwise_sum_f64(&values[mid..])
        }
    }
}

/// Ordinary least squares of `y = slope*x + intercept` returning
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    let ybar = sy / m;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Log-log slope fit of `errors` against `scales` (both positive).
pub fn loglog_fit(scales: &[f64], errors: &[f64]) -> (f64, f64, f64) {
    let xs: Vec<f64> = scales.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Parse one complex component in the CLI formats `a`, `bi`, `a+bi`, `a-bi`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Config("empty complex component".into()));
    }
    if let Some(body) = t.strip_suffix(['i', 'I']) {
        // Split into real and imaginary parts at the last +/- that is not an
        // exponent sign and not the leading sign.
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        match split {
            Some(idx) => {
                let re: f64 = body[..idx]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad complex literal {s:?}")))?;
                let imtxt = &body[idx..];
                let im: f64 = if imtxt == "+" {
                    1.0
                } else if imtxt == "-" {
                    -1.0
                } else {
                    imtxt
                        .parse()
                        .map_err(|_| Error::Config(format!("bad complex literal {s:?}")))?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if body.is_empty() {
                    1.0
                } else if body == "-" {
                    -1.0
                } else {
                    body.parse()
                        .map_err(|_| Error::Config(format!("bad complex literal {s:?}")))?
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t
            .parse()
            .map_err(|_| Error::Config(format!("bad complex literal {s:?}")))?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// Parse a comma-separated complex vector, e.g. `1+0i,0.5-2i` or `1,0`.
pub fn parse_complex_vector(s: &str) -> Result<Vec<Complex64>> {
    s.split(',').map(parse_complex).collect()
}

/// Fixed-width scientific float format used in every CSV cell.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
pub enum CsvField {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for CsvField {
    fn from(x: f64) -> Self {
        CsvField::Float(x)
    }
}
impl From<i64> for CsvField {
    fn from(x: i64) -> Self {
        CsvField::Int(x)
    }
}
impl From<&str> for CsvField {
    fn from(x: &str) -> Self {
        CsvField::Text(x.to_string())
    }
}
impl From<String> for CsvField {
    fn from(x: String) -> Self {
        CsvField::Text(x)
    }
}

/// Render rows to CSV text (UTF-8, header row, `.` decimal separator).
pub fn csv_to_string(header: &[&str], rows: &[Vec<CsvField>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut first = true;
        for field in row {
            if !first {
                out.push(',');
            }
            first = false;
            match field {
                CsvField::Int(v) => {
                    let _ = write!(out, "{v}");
                }
                CsvField::Float(v) => out.push_str(&fmt_f64(*v)),
                CsvField::Text(v) => out.push_str(v),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<CsvField>]) -> Result<()> {
    std::fs::write(path, csv_to_string(header, rows))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("json serialization failed: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
