//! Tabular output with a metadata header, rendered as CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use qsync_core::output::sig12;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sig12(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => {
                // round-trip through the 12-digit form so both formats agree
                let rounded: f64 = sig12(*x).parse().expect("sig12 output parses");
                json!(rounded)
            }
            Cell::Num(x) => Value::String(sig12(*x)),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    /// Ordered `key=value` pairs echoed in the header.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), ..Default::default() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, format: Format, mut w: W) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(w, "# qsync {}", env!("CARGO_PKG_VERSION"))?;
                writeln!(w, "# units: rates and frequencies in kappa1 = 1")?;
                for (k, v) in &self.meta {
                    writeln!(w, "# {k}={v}")?;
                }
                writeln!(w, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                let meta: Map<String, Value> =
                    self.meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let doc = json!({
                    "tool": format!("qsync {}", env!("CARGO_PKG_VERSION")),
                    "units": "rates and frequencies in kappa1 = 1",
                    "parameters": meta,
                    "columns": self.columns,
                    "rows": rows,
                });
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
            }
        }
        w.flush()
    }

    /// Writes to `path`, or to stdout when no path is given.
    pub fn emit(&self, format: Format, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => self.write(format, BufWriter::new(File::create(p)?)),
            None => self.write(format, io::stdout().lock()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.meta("x", 1.5);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Num(f64::INFINITY)]);
        let mut out = Vec::new();
        t.write(Format::Csv, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.ends_with("# x=1.5\na,b\n0.333333333333,inf\n"), "{s}");
    }

    #[test]
    fn json_infinity_is_a_string() {
        let mut t = Table::new(&["v"]);
        t.push(vec![Cell::Num(f64::INFINITY)]);
        t.push(vec![Cell::Num(2.0)]);
        let mut out = Vec::new();
        t.write(Format::Json, &mut out).unwrap();
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["rows"][0][0], "inf");
        assert_eq!(v["rows"][1][0], 2.0);
    }
}
