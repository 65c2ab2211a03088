//! CSV tables with an embedded config header, plus the run manifest.
//!
//! Every table file starts with `#` comment lines:
//!
//! ```text
//! # experiment: <name>
//! # table: <table>
//! # units: angles deg, mse and crlb deg^2, snr dB, power dBm
//! # config: <resolved ExperimentConfig as one-line JSON>
//! ```
//!
//! followed by an RFC 4180 header row and data rows. Missing values
//! (degenerate points, nonexistent bounds) are empty cells.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric cell; `None` for empty cells.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        self.rows.get(row)?.get(c)?.parse().ok()
    }
}

/// Shortest round-trip representation, empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_table<W: Write>(mut out: W, experiment: &str, config: &ExperimentConfig, table: &Table) -> Result<()> {
    writeln!(out, "# experiment: {experiment}")?;
    writeln!(out, "# table: {}", table.name)?;
    writeln!(out, "# units: angles deg, mse and crlb deg^2, snr dB, power dBm")?;
    writeln!(out, "# config: {}", config.to_json())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_path(dir: &Path, experiment: &str, table: &Table) -> PathBuf {
    if table.name == "main" {
        dir.join(format!("{experiment}.csv"))
    } else {
        dir.join(format!("{experiment}_{}.csv", table.name))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub version: &'a str,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub config: &'a ExperimentConfig,
}

/// Write every table and `<experiment>_manifest.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    experiment: &str,
    config: &ExperimentConfig,
    tables: &[Table],
    workers: Option<usize>,
    wall_time_s: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for t in tables {
        let path = table_path(dir, experiment, t);
        let f = fs::File::create(&path)?;
        write_table(std::io::BufWriter::new(f), experiment, config, t)?;
        paths.push(path);
    }
    let manifest = Manifest {
        experiment,
        version: env!("CARGO_PKG_VERSION"),
        master_seed: config.master_seed,
        workers,
        wall_time_s,
        files: paths
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
        config,
    };
    let mpath = dir.join(format!("{experiment}_manifest.json"));
    fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)?;
    paths.push(mpath);
    Ok(paths)
}
