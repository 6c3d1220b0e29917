use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
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

/// Rows of named columns. A record holds exactly one row and is written as
/// a single JSON object rather than an array.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub record: bool,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            record: false,
        }
    }

    pub fn record(pairs: Vec<(String, Cell)>) -> Self {
        let (columns, row) = pairs.into_iter().unzip();
        Table {
            columns,
            rows: vec![row],
            record: true,
        }
    }

    pub fn default_format(&self) -> Format {
        if self.record {
            Format::Json
        } else {
            Format::Csv
        }
    }
}

/// Shortest representation that parses back to the same value.
fn number(v: f64) -> Option<Number> {
    Number::from_f64(v)
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(v) => number(*v).map_or_else(|| v.to_string(), |n| n.to_string()),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

fn json_value(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => number(*v).map_or(Value::Null, Value::Number),
        Cell::Int(v) => Value::from(*v),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Empty => Value::Null,
    }
}

pub fn render(table: &Table, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(csv_field)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Json => {
            let objects: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let map: Map<String, Value> = table
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(json_value))
                        .collect();
                    Value::Object(map)
                })
                .collect();
            let value = match (table.record, objects.len()) {
                (true, 1) => objects.into_iter().next().unwrap_or(Value::Null),
                _ => Value::Array(objects),
            };
            let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Writes to `out` or standard output. A file that could not be written
/// completely is removed.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
            Ok(())
        }
        Some(path) => fs::write(path, text).map_err(|e| {
            let _ = fs::remove_file(path);
            CliError::Io(format!("{}: {e}", path.display()))
        }),
    }
}
