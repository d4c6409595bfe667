//! Result tables, atomic file writes and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::RunError;

/// A CSV table with a fixed header.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(RunError::io)?;
        for row in &self.rows {
            w.write_record(row).map_err(RunError::io)?;
        }
        w.into_inner().map_err(|e| RunError::Io(e.to_string()))
    }
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    if x == 0.0 || (1e-4..1e6).contains(&x.abs()) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(RunError::io)?;
    tmp.write_all(bytes).map_err(RunError::io)?;
    tmp.as_file().sync_all().map_err(RunError::io)?;
    tmp.persist(&target).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(target)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    /// Data rows for CSV files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseTime {
    pub phase: String,
    pub seconds: f64,
}

/// Everything needed to rerun an invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub library_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub outputs: Vec<FileEntry>,
    pub wall_times: Vec<PhaseTime>,
    pub truncated: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_stable() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(1e-12), "1e-12");
        assert_eq!(num(-3.5e7), "-3.5e7");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn csv_and_atomic_write() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let bytes = t.to_bytes().unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "a,b\n1,\"x,y\"\n");
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), "t.csv", &bytes).unwrap();
        assert_eq!(std::fs::read(p).unwrap(), bytes);
        assert_eq!(sha256_hex(b"abc").len(), 64);
    }
}
