//! Tables and their CSV and JSON renderings.
//!
//! Both formats carry the same metadata: command, resolved parameters,
//! master seed and version. Numbers are written in shortest round-trip form
//! in both, so parsing either one gives back the same `f64` values.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Missing, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Num(_) | Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub fn render(meta: &Metadata, table: &Table, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => render_csv(meta, table),
        Format::Json => render_json(meta, table),
    }
}

fn render_csv(meta: &Metadata, table: &Table) -> Result<String, CliError> {
    let mut out = String::new();
    out.push_str(&format!("# command: {}\n", meta.command));
    out.push_str(&format!("# version: {}\n", meta.version));
    out.push_str(&format!("# seed: {}\n", meta.seed));
    for (k, v) in &meta.params {
        out.push_str(&format!("# param {k}: {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).map_err(csv_error)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))?);
    Ok(out)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String, CliError> {
    serde_json::to_string(v).map_err(|e| CliError::Io(e.to_string()))
}

fn render_json(meta: &Metadata, table: &Table) -> Result<String, CliError> {
    // one row per line keeps large tables readable and diffable
    let meta_text = serde_json::to_string_pretty(meta)
        .map_err(|e| CliError::Io(e.to_string()))?
        .replace('\n', "\n  ");
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| to_json(&r.iter().map(Cell::json).collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"metadata\": {meta_text},\n"));
    s.push_str(&format!("  \"columns\": {},\n", to_json(&table.columns)?));
    if rows.is_empty() {
        s.push_str("  \"rows\": []\n}\n");
    } else {
        s.push_str(&format!("  \"rows\": [\n    {}\n  ]\n}}\n", rows.join(",\n    ")));
    }
    Ok(s)
}

/// The data rows of a rendered file, without the metadata header.
pub fn payload(text: &str, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => Ok(text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect()),
        Format::Json => {
            let v: Value = serde_json::from_str(text).map_err(|e| CliError::Io(e.to_string()))?;
            Ok(format!("{}\n{}", v["columns"], v["rows"]))
        }
    }
}
