//! Bit-stable text output: every float is written with 17 significant
//! digits in lowercase scientific notation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::Result;

/// `x` with 17 significant digits, e.g. `-1.2500000000000000e-3`.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float serialised through [`sci`]; non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sci(pub f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(sci(self.0))
                .map_err(serde::ser::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub fn sci_vec(xs: &[f64]) -> Vec<Sci> {
    xs.iter().copied().map(Sci).collect()
}

/// Pretty-printed JSON followed by a newline.
pub fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// One cell of a CSV row.
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => sci(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(t: &str) -> Self {
        Cell::Text(t.to_string())
    }
}

/// Comma-separated text with a single header line.
pub fn csv_text<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<Cell>>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Matrix with its axes: the first line holds the column axis after a
/// corner label, every later line starts with its row-axis value.
pub fn matrix_csv_text(
    corner: &str,
    row_axis: &[f64],
    col_axis: &[f64],
    value: impl Fn(usize, usize) -> f64,
) -> String {
    let head: Vec<String> = col_axis.iter().map(|&x| sci(x)).collect();
    let mut out = format!("{corner},{}\n", head.join(","));
    for (r, &y) in row_axis.iter().enumerate() {
        let vals: Vec<String> = (0..col_axis.len()).map(|c| sci(value(r, c))).collect();
        out.push_str(&format!("{},{}\n", sci(y), vals.join(",")));
    }
    out
}

/// A named output file held in memory until the run succeeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub text: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            text,
        }
    }
}

/// Create `dir` if needed and write every artifact into it.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let p = dir.join(&a.name);
            fs::write(&p, &a.text)?;
            Ok(p)
        })
        .collect()
}
