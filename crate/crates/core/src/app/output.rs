// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV emission and run manifests.
//!
//! Every CSV opens with `# manifest_sha256=<hex>`, the hash of the manifest's reproducible
//! part (command, software version and resolved configuration), followed by a header row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured value.
    pub value: f64,
    /// Bound the value was compared against.
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: format!("{value:.6e} <= {threshold:.3e}"),
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            detail: format!("{value:.6e} >= {threshold:.3e}"),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

/// Identity of a run: everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIdentity {
    pub command: String,
    pub preset: Option<String>,
    pub version: String,
    /// Canonical TOML of the resolved configuration.
    pub config: String,
}

impl RunIdentity {
    pub fn new(command: &str, preset: Option<&str>, cfg: &RunConfig) -> Self {
        RunIdentity {
            command: command.into(),
            preset: preset.map(str::to_string),
            version: VERSION.into(),
            config: cfg.to_toml(),
        }
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("identity is serializable");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_sha256: String,
    pub identity: RunIdentity,
    pub wall_clock_seconds: f64,
    pub checks: Vec<Check>,
    /// Measured quantities of interest, in scaled units.
    pub observables: BTreeMap<String, f64>,
    /// File names written next to the manifest.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut f = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, self).map_err(std::io::Error::from)?;
        writeln!(f)?;
        f.flush()?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text).map_err(std::io::Error::from)?)
    }
}

/// Writes one CSV with the manifest comment and a header.
pub struct CsvWriter {
    inner: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, manifest_hash: &str, header: &[&str]) -> Result<Self> {
        let mut inner = BufWriter::new(File::create(path)?);
        writeln!(inner, "# manifest_sha256={manifest_hash}")?;
        writeln!(inner, "{}", header.join(","))?;
        Ok(CsvWriter {
            inner,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        debug_assert_eq!(values.len(), self.columns);
        let mut first = true;
        for v in values {
            if !first {
                self.inner.write_all(b",")?;
            }
            first = false;
            write!(self.inner, "{v}")?;
        }
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    /// Row whose cells may be empty.
    pub fn row_opt(&mut self, values: &[Option<f64>]) -> Result<()> {
        debug_assert_eq!(values.len(), self.columns);
        let cells: Vec<String> = values
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        writeln!(self.inner, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Parsed CSV: the manifest hash, the header and numeric rows (empty cells become NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub manifest_hash: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bad = |what: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {what}", path.display()));
        let mut lines = text.lines();
        let hash = lines
            .next()
            .and_then(|l| l.strip_prefix("# manifest_sha256="))
            .ok_or_else(|| bad("missing manifest comment"))?
            .to_string();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for line in lines {
            let row = line
                .split(',')
                .map(|c| if c.is_empty() { Ok(f64::NAN) } else { c.parse::<f64>() })
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| bad("non-numeric cell"))?;
            rows.push(row);
        }
        Ok(CsvTable {
            manifest_hash: hash,
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}
