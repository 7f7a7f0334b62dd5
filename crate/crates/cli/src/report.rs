//! Run manifest and CSV output.
//!
//! Manifests are byte-deterministic for a fixed config and seed: timing is
//! reported on stderr, never in the files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// File name relative to the output directory (keeps manifests
/// byte-identical across output locations).
pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value < threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub checks: Vec<CheckLine>,
    pub calibration: BTreeMap<String, serde_json::Value>,
    pub failed_stage: Option<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool: "isolab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            checks: Vec::new(),
            calibration: BTreeMap::new(),
            failed_stage: None,
            outputs: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckLine) {
        self.checks.push(check);
    }

    pub fn calibrate(&mut self, key: &str, value: serde_json::Value) {
        self.calibration.insert(key.to_string(), value);
    }

    pub fn all_pass(&self) -> bool {
        self.failed_stage.is_none() && self.checks.iter().all(|c| c.pass)
    }

    /// Write manifest.json; returns the exit code implied by the checks
    /// (0 pass, 1 numeric failure).
    pub fn finalize(&mut self, out_dir: &Path) -> Result<i32> {
        if self.failed_stage.is_none() {
            if let Some(bad) = self.checks.iter().find(|c| !c.pass) {
                self.failed_stage = Some(bad.name.clone());
            }
        }
        let path = out_dir.join("manifest.json");
        let body = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, body).with_context(|| format!("writing {path:?}"))?;
        for check in &self.checks {
            println!(
                "[{}] {}: {:.6e} vs {:.1e} -> {}",
                self.command,
                check.name,
                check.value,
                check.threshold,
                if check.pass { "pass" } else { "FAIL" }
            );
        }
        Ok(if self.all_pass() { 0 } else { 1 })
    }
}

/// Minimal deterministic CSV writer: header plus rows, LF endings,
/// shortest-round-trip float formatting.
pub struct CsvWriter {
    path: PathBuf,
    body: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(path: PathBuf, header: &[&str]) -> Self {
        Self {
            path,
            body: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "column count mismatch");
        let mut line = String::new();
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        line.push('\n');
        self.body.push_str(&line);
    }

    pub fn finish(self) -> Result<PathBuf> {
        fs::write(&self.path, self.body).with_context(|| format!("writing {:?}", self.path))?;
        Ok(self.path)
    }
}
