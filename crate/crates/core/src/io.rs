//! Schema-versioned CSV and JSON persistence shared by every pipeline stage.
//!
//! Every CSV file written here starts with a comment line
//! `# schema=<name>/<version> config_hash=<hex>` followed by the header row.
//! Readers skip `#` lines, check the schema name when a schema line is
//! present, and report bad cells by file, line and column.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct CsvSchema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl CsvSchema {
    pub fn tag(&self) -> String {
        format!("{}/{}", self.name, self.version)
    }
}

/// Hex digest (16 chars) of the given byte chunks, used to stamp outputs.
pub fn config_hash<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(&h.finalize()[..8])
}

/// Shortest representation that parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<I>(path: &Path, schema: &CsvSchema, config_hash: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# schema={} config_hash={}", schema.tag(), config_hash)
        .map_err(|e| Error::io(path, e))?;
    {
        let mut w = csv::WriterBuilder::new().from_writer(&mut out);
        w.write_record(schema.columns)?;
        for row in rows {
            debug_assert_eq!(row.len(), schema.columns.len());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// A parsed CSV table with its column index.
pub struct CsvTable {
    file: String,
    columns: Vec<String>,
    records: Vec<csv::StringRecord>,
    pub schema_line: Option<String>,
}

pub struct Row<'a> {
    table: &'a CsvTable,
    record: &'a csv::StringRecord,
}

impl CsvTable {
    pub fn read(path: &Path, schema: &CsvSchema, require_schema_line: bool) -> Result<Self> {
        let file_name = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader
            .read_line(&mut first)
            .map_err(|e| Error::io(path, e))?;
        let schema_line = first
            .strip_prefix('#')
            .map(|s| s.trim().to_string());
        match &schema_line {
            Some(line) => {
                let tag = line
                    .split_whitespace()
                    .find_map(|kv| kv.strip_prefix("schema="))
                    .unwrap_or("");
                let name = tag.split('/').next().unwrap_or("");
                if name != schema.name {
                    return Err(Error::schema(
                        &file_name,
                        1,
                        "schema",
                        format!("expected schema {}, found `{tag}`", schema.tag()),
                    ));
                }
            }
            None if require_schema_line => {
                return Err(Error::schema(
                    &file_name,
                    1,
                    "schema",
                    format!("missing `# schema={}` header line", schema.tag()),
                ));
            }
            None => {}
        }
        // Re-open so the csv reader sees the header row at the right line.
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(BufReader::new(file));
        let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if columns != schema.columns {
            return Err(Error::schema(
                &file_name,
                if schema_line.is_some() { 2 } else { 1 },
                "header",
                format!(
                    "expected header `{}`, found `{}`",
                    schema.columns.join(","),
                    columns.join(",")
                ),
            ));
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::schema(&file_name, line, "-", e.to_string())
            })?;
            records.push(rec);
        }
        Ok(CsvTable {
            file: file_name,
            columns,
            records,
            schema_line,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.records.iter().map(move |record| Row {
            table: self,
            record,
        })
    }
}

impl Row<'_> {
    pub fn line(&self) -> u64 {
        self.record.position().map_or(0, |p| p.line())
    }

    pub fn get(&self, column: &str) -> &str {
        let idx = self
            .table
            .columns
            .iter()
            .position(|c| c == column)
            .expect("column validated against schema");
        self.record.get(idx).unwrap_or("")
    }

    pub fn error(&self, column: &str, message: impl Into<String>) -> Error {
        Error::schema(&self.table.file, self.line(), column, message)
    }

    pub fn parse<T: FromStr>(&self, column: &str) -> Result<T> {
        let raw = self.get(column);
        raw.parse()
            .map_err(|_| self.error(column, format!("cannot parse `{raw}`")))
    }

    pub fn parse_opt<T: FromStr>(&self, column: &str) -> Result<Option<T>> {
        if self.get(column).is_empty() {
            Ok(None)
        } else {
            self.parse(column).map(Some)
        }
    }

    /// Parses a cell with a domain constructor, wrapping its error with
    /// the cell location.
    pub fn parse_with<T>(&self, column: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<T> {
        let raw = self.get(column);
        f(raw).map_err(|e| self.error(column, e.to_string()))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::schema(
            path.display().to_string(),
            e.line() as u64,
            format!("col {}", e.column()),
            e.to_string(),
        )
    })
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
