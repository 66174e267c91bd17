//! Output directory bookkeeping: CSV and JSON-lines files plus the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use radiant_core::field::fmt17;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const MANIFEST: &str = "manifest.json";

pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String, usize)>,
}

/// A CSV cell.
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
    /// Missing value, written as an empty field.
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt17(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::I(i as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::S(b.to_string())
    }
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let mut f = fs::File::create(self.dir.join(name))?;
        f.write_all(bytes)?;
        self.files.push((name.to_string(), hex::encode(Sha256::digest(bytes)), bytes.len()));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> CliResult<()> {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    /// Single-record JSON-lines file.
    pub fn jsonl(&mut self, name: &str, record: &Value) -> CliResult<()> {
        let mut s = serde_json::to_string(record).expect("JSON values serialize");
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, mut manifest: Value) -> CliResult<()> {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(name, sha, bytes)| json!({"name": name, "sha256": sha, "bytes": bytes}))
            .collect();
        manifest["files"] = Value::Array(files);
        let mut text = serde_json::to_string_pretty(&manifest).expect("JSON values serialize");
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(())
    }
}
