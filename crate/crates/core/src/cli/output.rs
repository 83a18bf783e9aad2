//! Report files. JSON reports wrap the payload with a header holding the
//! timestamp and environment; CSV files carry no run metadata at all.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub unix_time: u64,
    pub threads: usize,
}

impl Header {
    pub fn new(command: &str) -> Self {
        Header {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    header: &'a Header,
    payload: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, header: &Header, payload: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Wrapped { header, payload })?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// A CSV table whose first column is the schema version.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        let mut text = String::from("schema_version");
        for c in columns {
            text.push(',');
            text.push_str(c);
        }
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let _ = write!(self.text, "{CSV_SCHEMA_VERSION}");
        for c in cells {
            self.text.push(',');
            match c {
                Cell::Num(v) => {
                    let _ = write!(self.text, "{v:e}");
                }
                Cell::Int(v) => {
                    let _ = write!(self.text, "{v}");
                }
                Cell::Text(s) => self.text.push_str(s),
                Cell::Empty => {}
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
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
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
