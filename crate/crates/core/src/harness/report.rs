//! Tabular reports written as CSV and JSON from the same cells.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

/// Bumped whenever a column is renamed, removed, or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Rows of named cells plus run parameters. CSV and JSON are both rendered
/// from `rows`, so they agree field for field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub schema_version: u32,
    pub command: String,
    pub params: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            params: Map::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// `{schema_version, command, params, rows: [{column: value}]}`.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(r.iter().cloned())
                        .collect(),
                )
            })
            .collect();
        let doc = serde_json::json!({
            "schema_version": self.schema_version,
            "command": self.command,
            "params": self.params,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }

    /// Header row, then one line per row; a leading `schema_version` column
    /// repeats the version on every line.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header =
            std::iter::once("schema_version").chain(self.columns.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for row in &self.rows {
            let cells =
                std::iter::once(self.schema_version.to_string()).chain(row.iter().map(csv_cell));
            w.write_record(cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.to_csv())?;
        std::fs::write(&json_path, self.to_json())?;
        Ok((csv_path, json_path))
    }
}

/// The CSV rendering of a JSON cell: strings bare, `null` empty, numbers and
/// booleans as JSON writes them.
pub fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A finite float as a JSON number; non-finite values become strings so
/// they survive the round trip.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| Value::String(format!("{v}")), Value::Number)
}

/// Exact integers beyond `u64` are written as decimal strings.
pub fn big(v: u128) -> Value {
    u64::try_from(v).map_or_else(|_| Value::String(v.to_string()), Value::from)
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| Error::Config(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|rec| rec.iter().map(String::from).collect())
                .map_err(|e| Error::Config(e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new("demo", &["x", "value", "note", "missing"]).param("k", 2);
        t.push(vec![
            Value::from(50),
            num(0.1 + 0.2),
            Value::from("a, \"quoted\" note"),
            Value::Null,
        ]);
        t.push(vec![
            Value::from(100),
            num(f64::NAN),
            Value::from(""),
            big(u128::MAX),
        ]);
        let (header, rows) = parse_csv(&t.to_csv()).unwrap();
        let json: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
        assert_eq!(header[0], "schema_version");
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0], SCHEMA_VERSION.to_string());
            for (j, col) in t.columns.iter().enumerate() {
                assert_eq!(row[j + 1], csv_cell(&json["rows"][i][col]), "{col}");
            }
        }
        assert_eq!(json["rows"][1]["value"], "NaN");
    }

    #[test]
    fn write_creates_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::new("demo", &["a"]);
        let (c, j) = t.write(&dir.path().join("nested"), "demo").unwrap();
        assert!(c.exists() && j.exists());
    }
}
