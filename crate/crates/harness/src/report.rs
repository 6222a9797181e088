//! CSV + JSON summary report pairs.
//!
//! Reports carry no timings, hostnames or paths, so regenerating one from its
//! embedded config gives identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::envelope::sha256_hex;
use crate::error::{io_err, HarnessError, Result};
use crate::BANNER;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtLeast,
    AtMost,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    /// `None` when there was nothing to measure; such a verdict fails.
    pub value: Option<f64>,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Verdict {
    pub fn new(name: &str, value: Option<f64>, comparison: Comparison, threshold: f64) -> Self {
        let passed = value.is_some_and(|v| match comparison {
            Comparison::AtLeast => v >= threshold,
            Comparison::AtMost => v <= threshold,
        });
        Verdict {
            name: name.into(),
            value,
            threshold,
            comparison,
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub name: String,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
}

/// Formats a float for a CSV cell: shortest round-trip representation.
pub fn cell(v: f64) -> String {
    format!("{v:?}")
}

impl Report {
    pub fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        Report {
            name: config.name.clone(),
            config: serde_json::to_value(config).expect("config serializes"),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(
            key.into(),
            serde_json::to_value(value).expect("summary value serializes"),
        );
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| HarnessError::Csv(e.into_error().into()))
    }

    pub fn summary_json(&self) -> Result<Vec<u8>> {
        let csv = self.csv_bytes()?;
        let doc = json!({
            "banner": BANNER,
            "format_version": REPORT_VERSION,
            "name": self.name,
            "config": self.config,
            "rows": self.rows.len(),
            "csv_sha256": sha256_hex(&csv),
            "summary": self.summary,
            "verdicts": self.verdicts,
            "passed": self.passed(),
        });
        let mut out = serde_json::to_vec_pretty(&doc)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes `<name>.csv` and `<name>.summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        let json_path = dir.join(format!("{}.summary.json", self.name));
        std::fs::write(&csv_path, self.csv_bytes()?).map_err(io_err(&csv_path))?;
        std::fs::write(&json_path, self.summary_json()?).map_err(io_err(&json_path))?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_value_fails() {
        assert!(!Verdict::new("x", None, Comparison::AtLeast, 0.0).passed);
        assert!(Verdict::new("x", Some(0.5), Comparison::AtMost, 0.5).passed);
        assert!(!Verdict::new("x", Some(0.6), Comparison::AtMost, 0.5).passed);
    }

    #[test]
    fn cells_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0, 1e-300] {
            assert_eq!(cell(v).parse::<f64>().unwrap(), v);
        }
    }
}
