//! Vector input and table output.
//!
//! A vector file is either text, one value per line (blank lines and `#`
//! comments skipped, an optional non-numeric header), or binary: the magic
//! bytes [`MAGIC`], a little-endian u64 count, then that many little-endian
//! f64 values. Text prior files may carry a second column of weights.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use crate::Invalid;

pub const MAGIC: &[u8; 8] = b"FDRVEC\x00\x01";
pub const SCHEMA_VERSION: u32 = 1;

/// Rows of a text file, each a list of numbers.
fn parse_rows(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        if rows.is_empty() && parsed.iter().all(Option::is_none) {
            continue;
        }
        let row = parsed
            .into_iter()
            .map(|v| v.filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| {
                Invalid(format!(
                    "{}:{}: not a finite number: {line}",
                    path.display(),
                    i + 1
                ))
            })?;
        rows.push(row);
    }
    Ok(rows)
}

fn parse_binary(bytes: &[u8], path: &Path) -> Result<Vec<f64>> {
    let body = &bytes[MAGIC.len()..];
    if body.len() < 8 {
        return Err(Invalid(format!("{}: truncated header", path.display())).into());
    }
    let count = u64::from_le_bytes(body[..8].try_into().unwrap()) as usize;
    let data = &body[8..];
    if data.len() != count.saturating_mul(8) {
        return Err(Invalid(format!(
            "{}: header says {count} values but {} bytes follow",
            path.display(),
            data.len()
        ))
        .into());
    }
    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Invalid(format!("{}: value {i} is not finite", path.display())).into());
    }
    Ok(values)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Invalid(format!("cannot read {}: {e}", path.display())).into())
}

/// Reads an observation vector. An empty file is an error.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let bytes = read_bytes(path)?;
    let values = if bytes.starts_with(MAGIC) {
        parse_binary(&bytes, path)?
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Invalid(format!("{}: not UTF-8 text", path.display())))?;
        let rows = parse_rows(&text, path)?;
        if let Some(row) = rows.iter().find(|r| r.len() != 1) {
            return Err(Invalid(format!(
                "{}: expected one value per line, got {}",
                path.display(),
                row.len()
            ))
            .into());
        }
        rows.into_iter().map(|r| r[0]).collect()
    };
    if values.is_empty() {
        return Err(Invalid(format!("{}: no values", path.display())).into());
    }
    Ok(values)
}

/// Reads prior atoms and weights; weights default to uniform.
pub fn read_prior(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(MAGIC) {
        return read_vector(path).map(|v| (v, None));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Invalid(format!("{}: not UTF-8 text", path.display())))?;
    let rows = parse_rows(&text, path)?;
    if rows.is_empty() {
        return Err(Invalid(format!("{}: no values", path.display())).into());
    }
    let width = rows[0].len();
    if !(1..=2).contains(&width) || rows.iter().any(|r| r.len() != width) {
        return Err(Invalid(format!(
            "{}: expected rows of `atom` or `atom,weight`",
            path.display()
        ))
        .into());
    }
    let atoms = rows.iter().map(|r| r[0]).collect();
    let weights = (width == 2).then(|| rows.iter().map(|r| r[1]).collect());
    Ok((atoms, weights))
}

#[cfg(test)]
pub fn encode_binary(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// A CSV table led by a schema comment line.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        let mut text = format!(
            "# fdrthresh {kind} schema={SCHEMA_VERSION} version={}\n",
            fdrthresh::sim::VERSION
        );
        text.push_str(&columns.join(","));
        text.push('\n');
        Self {
            text,
            width: columns.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.width, "row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Num(v) => write!(self.text, "{v}").unwrap(),
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Text(s) => self.text.push_str(s),
                Cell::Missing => self.text.push_str("NA"),
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }

    #[cfg(test)]
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
