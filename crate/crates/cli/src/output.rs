//! Result export: CSV tables with 17-significant-digit floats, and a JSON
//! record holding the same rows plus run metadata. Wall-clock timings live
//! only in the record's `timings` field.

use std::path::{Path, PathBuf};

use qzk_core::format::sig17;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => sig17(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
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
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Io(format!("csv: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Rows as JSON objects keyed by column name, floats in sig17 form.
    pub fn to_json_rows(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows
            .iter()
            .map(|row| {
                self.header
                    .iter()
                    .zip(row)
                    .map(|(k, cell)| ((*k).to_string(), cell_json(cell)))
                    .collect()
            })
            .collect()
    }
}

fn cell_json(cell: &Cell) -> serde_json::Value {
    match cell {
        Cell::Int(i) => serde_json::Value::from(*i),
        // numbers keep their 17-digit text so JSON and CSV agree bit for bit
        Cell::Float(x) => serde_json::Value::String(sig17(*x)),
        Cell::Bool(b) => serde_json::Value::Bool(*b),
        Cell::Text(s) => serde_json::Value::String(s.clone()),
        Cell::Empty => serde_json::Value::Null,
    }
}

#[derive(Debug, Serialize)]
pub struct RunRecord<'a, C: Serialize, M: Serialize> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub measured: M,
    pub rows: Vec<serde_json::Map<String, serde_json::Value>>,
    pub timings: serde_json::Value,
}

/// Path of the JSON record accompanying a CSV output.
pub fn record_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn to_pretty_json(value: &impl Serialize) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(format!("json: {e}")))
}

/// Writes the CSV table to `out` (and the record next to it), or prints the
/// table to stdout when no path was given.
pub fn emit<C: Serialize, M: Serialize>(
    out: Option<&Path>,
    table: &Table,
    record: &RunRecord<'_, C, M>,
) -> CliResult<()> {
    let csv = table.to_csv()?;
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            write_file(&record_path(path), &to_pretty_json(record)?)?;
            log::info!("wrote {} and {}", path.display(), record_path(path).display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_seventeen_digits() {
        let mut t = Table::new(vec!["a", "b", "c", "d"]);
        t.push(vec![0.1.into(), 3usize.into(), true.into(), Cell::Empty]);
        assert_eq!(t.to_csv().unwrap(), "a,b,c,d\n1.0000000000000001e-1,3,true,\n");
        let rows = t.to_json_rows();
        assert_eq!(rows[0]["a"], "1.0000000000000001e-1");
        assert!(rows[0]["d"].is_null());
    }
}
