//! CSV and JSON artifacts. Floats are written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use compacton_core::diagnostics::DiagnosticsRecord;
use compacton_core::grid::GridFunction;
use compacton_core::timestepper::Event;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;

pub const SNAPSHOTS: &str = "snapshots.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const EVENTS: &str = "events.json";
pub const MANIFEST: &str = "manifest.json";
pub const BOUNDS: &str = "bounds.json";
pub const CONVERGENCE: &str = "convergence.csv";
pub const CONVERGENCE_REPORT: &str = "convergence.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    /// Data rows, excluding the CSV header; array length for JSON arrays; 1 for JSON objects.
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: Config,
    pub started: String,
    pub finished: String,
    pub status: String,
    pub events: Vec<Event>,
    pub files: Vec<FileEntry>,
}

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// `t,cell,node,x,u`, ordered by time and then position.
pub fn write_snapshots(dir: &Path, trajectory: &[(f64, GridFunction)]) -> Result<FileEntry, CliError> {
    let mut w = csv_writer(&dir.join(SNAPSHOTS))?;
    w.write_record(["t", "cell", "node", "x", "u"])?;
    let mut rows = 0;
    for (t, u) in trajectory {
        let t = fmt(*t);
        for (cell, node, x, v) in u.nodes() {
            w.write_record([t.as_str(), &cell.to_string(), &node.to_string(), &fmt(x), &fmt(v)])?;
            rows += 1;
        }
    }
    w.flush().map_err(|e| CliError::io(dir.join(SNAPSHOTS), e))?;
    Ok(FileEntry { name: SNAPSHOTS.into(), rows })
}

pub fn write_diagnostics(dir: &Path, records: &[DiagnosticsRecord]) -> Result<FileEntry, CliError> {
    let mut w = csv_writer(&dir.join(DIAGNOSTICS))?;
    w.write_record(DiagnosticsRecord::CSV_HEADER.split(','))?;
    for r in records {
        w.write_record(r.values().iter().map(|v| fmt(*v)))?;
    }
    w.flush().map_err(|e| CliError::io(dir.join(DIAGNOSTICS), e))?;
    Ok(FileEntry { name: DIAGNOSTICS.into(), rows: records.len() })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

pub fn write_events(dir: &Path, events: &[Event]) -> Result<FileEntry, CliError> {
    write_json(&dir.join(EVENTS), events)?;
    Ok(FileEntry { name: EVENTS.into(), rows: events.len() })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path: PathBuf = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Data rows of a CSV file or entries of a JSON array (1 for any other JSON value).
pub fn count_rows(path: &Path) -> Result<usize, CliError> {
    if path.extension().is_some_and(|e| e == "csv") {
        let mut r = csv::Reader::from_path(path)?;
        return Ok(r.records().count());
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(value.as_array().map_or(1, Vec::len))
}
