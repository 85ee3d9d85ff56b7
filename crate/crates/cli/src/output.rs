//! Deterministic table emission.
//!
//! Every file starts with `# tqet-lab <version> config-hash=<hex>`. CSV rows
//! use `{:.16e}` for reals (17 significant digits), `nan` for undefined
//! values and `\n` line endings. JSON output is the same comment line followed
//! by one object per row, keyed by the CSV header; undefined values are
//! `null`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};

use crate::config::OutputFormat;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Real(_) | Cell::Missing => "nan".into(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Missing => Value::Null,
            Cell::Int(n) => Value::Number((*n).into()),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self, banner: &str) -> String {
        let mut s = format!("{banner}\n{}\n", self.header.join(","));
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&fields.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self, banner: &str) -> String {
        let mut s = format!("{banner}\n");
        for row in &self.rows {
            let object: Map<String, Value> = self
                .header
                .iter()
                .zip(row)
                .map(|(k, v)| (k.to_string(), v.json()))
                .collect();
            s.push_str(&Value::Object(object).to_string());
            s.push('\n');
        }
        s
    }
}

/// Writes named tables into one directory.
pub struct Writer {
    dir: PathBuf,
    banner: String,
    format: OutputFormat,
}

impl Writer {
    pub fn new(dir: &Path, config_hash: &str, format: OutputFormat) -> Self {
        Self {
            dir: dir.to_path_buf(),
            banner: format!("# tqet-lab {} config-hash={config_hash}", env!("CARGO_PKG_VERSION")),
            format,
        }
    }

    /// Writes `<stem>.csv` and/or `<stem>.json`; returns the paths written.
    pub fn write(&self, stem: &str, table: &Table) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::new();
        if self.format.csv() {
            let path = self.dir.join(format!("{stem}.csv"));
            fs::write(&path, table.to_csv(&self.banner))?;
            written.push(path);
        }
        if self.format.json() {
            let path = self.dir.join(format!("{stem}.json"));
            fs::write(&path, table.to_json(&self.banner))?;
            written.push(path);
        }
        Ok(written)
    }
}
