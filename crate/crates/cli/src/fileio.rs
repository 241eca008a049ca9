//! Plain-text dense matrix and vector files.
//!
//! ```text
//! # optional comments
//! 2 2
//! 1.5 0-1i
//! 0+1i 2
//! ```
//!
//! The first non-comment line is `rows cols`, followed by `rows * cols`
//! whitespace-separated entries in row-major order. An entry is `re` or
//! `re+imi` / `re-imi`. Vectors use the same grammar with header `n 1`.

use std::fs;
use std::path::Path;

use tnhhl::{DenseMatrix, Error, Result, C64};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(s: &str, line: usize, token: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("malformed entry '{token}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite entry '{token}'")));
    }
    Ok(v)
}

/// Parses a single complex entry such as `-2`, `1.5e-3+2i` or `0-0.25i`.
pub fn parse_complex(token: &str, line: usize) -> Result<C64> {
    let Some(body) = token.strip_suffix('i') else {
        return Ok(C64::new(parse_real(token, line, token)?, 0.0));
    };
    // Split at the last sign that is not the leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = parse_real(&body[..k], line, token)?;
            let im = parse_real(&body[k..], line, token)?;
            Ok(C64::new(re, im))
        }
        None => Ok(C64::new(0.0, parse_real(body, line, token)?)),
    }
}

/// Canonical text for one entry; `parse_complex` inverts it exactly.
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 && z.im.is_sign_positive() {
        format!("{:?}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

/// Parses matrix text into `(rows, cols, entries)`.
fn parse_entries(text: &str) -> Result<(usize, usize, Vec<C64>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing 'rows cols' header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [r, c] = dims[..] else {
        return Err(parse_err(
            hline,
            format!("expected 'rows cols', got '{header}'"),
        ));
    };
    let parse_dim = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(parse_err(hline, format!("invalid dimension '{s}'"))),
        }
    };
    let (rows, cols) = (parse_dim(r)?, parse_dim(c)?);
    let expected = rows * cols;
    let mut entries = Vec::with_capacity(expected);
    let mut last_line = hline;
    for (ln, l) in lines {
        last_line = ln;
        for tok in l.split_whitespace() {
            if entries.len() == expected {
                return Err(parse_err(
                    ln,
                    format!("more than {expected} entries for a {rows}x{cols} matrix"),
                ));
            }
            entries.push(parse_complex(tok, ln)?);
        }
    }
    if entries.len() != expected {
        return Err(parse_err(
            last_line,
            format!(
                "expected {expected} entries for a {rows}x{cols} matrix, found {}",
                entries.len()
            ),
        ));
    }
    Ok((rows, cols, entries))
}

pub fn parse_matrix_text(text: &str) -> Result<DenseMatrix> {
    let (rows, cols, entries) = parse_entries(text)?;
    DenseMatrix::from_vec(rows, cols, entries)
}

pub fn parse_vector_text(text: &str) -> Result<Vec<C64>> {
    let (rows, cols, entries) = parse_entries(text)?;
    if cols != 1 {
        return Err(parse_err(
            1,
            format!("vector file needs header 'n 1', got '{rows} {cols}'"),
        ));
    }
    Ok(entries)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

pub fn parse_matrix_file(path: &Path) -> Result<DenseMatrix> {
    parse_matrix_text(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn parse_vector_file(path: &Path) -> Result<Vec<C64>> {
    parse_vector_text(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn format_matrix(a: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|&z| format_complex(z)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_vector(v: &[C64]) -> String {
    let mut out = format!("{} 1\n", v.len());
    for &z in v {
        out.push_str(&format_complex(z));
        out.push('\n');
    }
    out
}
