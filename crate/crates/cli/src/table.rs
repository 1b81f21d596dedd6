use std::io::Write;

use qsov::C;
use serde_json::{json, Map, Value};

use crate::config::{format_complex, format_real, Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Complex(C),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Complex(z) => format_complex(*z),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Real(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Complex(z) => Value::String(format_complex(*z)),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<C> for Cell {
    fn from(v: C) -> Self {
        Cell::Complex(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Failed check, reported by name.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
}

/// Result of one subcommand.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self { command, columns: columns.to_vec(), rows: Vec::new(), failures: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn check(&mut self, name: impl Into<String>, observed: f64, threshold: f64) -> bool {
        let ok = observed <= threshold;
        if !ok {
            self.failures.push(Failure { name: name.into(), observed, threshold });
        }
        ok
    }

    pub fn write(&self, cfg: &RunConfig, out: &mut dyn Write) -> std::io::Result<()> {
        match cfg.format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(cfg, out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(k, v)| (k.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let failures: Vec<Value> = self
            .failures
            .iter()
            .map(|f| json!({"name": f.name, "observed": f.observed, "threshold": f.threshold}))
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": cfg,
            "columns": self.columns,
            "rows": rows,
            "status": if self.failures.is_empty() { "ok" } else { "invariant_failure" },
            "failures": failures,
        })
    }

    fn write_json(&self, cfg: &RunConfig, out: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, &self.to_json(cfg))?;
        writeln!(out)
    }
}
