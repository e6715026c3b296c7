//! Plain-text complex matrices: one row per line, whitespace-separated
//! `re+imj` tokens. Blank lines and lines starting with `#` are ignored.
//! A token without an imaginary part (`0.5`) or without a real part
//! (`-2j`) is accepted too.

use std::path::Path;

use num_complex::Complex64;

use crate::{CMat, Error, Result};

/// Parses one `re+imj` token.
pub fn parse_complex(token: &str) -> Option<Complex64> {
    let t = token.trim();
    let Some(body) = t.strip_suffix(['j', 'J']) else {
        return t.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not an exponent sign or the leading one
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (body[..i].parse::<f64>().ok()?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    Some(Complex64::new(re, im))
}

pub fn format_complex(z: Complex64) -> String {
    format!("{:.17e}{:+.17e}j", z.re, z.im)
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| parse_complex(tok).ok_or_else(|| Error::MatrixFile { line: k + 1, msg: format!("cannot parse `{tok}` as re+imj") }))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::MatrixFile { line: k + 1, msg: format!("row has {} entries, expected {}", row.len(), first.len()) });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::MatrixFile { line: 0, msg: "no matrix rows".into() });
    }
    let (n, m) = (rows.len(), rows[0].len());
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMat> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
