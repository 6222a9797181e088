//! Ground truth kept apart from public key material.
//!
//! Classifiers only ever see public artifacts; [`score`] is the one place the
//! ledger is read.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pseudoent_core::Seed;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    /// Ground-truth class, e.g. `low`/`high` or `product`/`entangled`.
    pub truth: String,
    pub construction: String,
    pub n: usize,
    pub f: Option<usize>,
    pub seed: Seed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ledger {
    entries: BTreeMap<String, LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn insert(&mut self, id: String, entry: LedgerEntry) {
        self.entries.insert(id, entry);
    }

    pub fn get(&self, id: &str) -> Option<&LedgerEntry> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the ledger, refusing any location inside `key_dir`.
    pub fn save(&self, path: &Path, key_dir: &Path) -> Result<()> {
        let parent = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let canon = |p: &Path| std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
        if canon(parent).starts_with(canon(key_dir)) {
            return Err(HarnessError::Colocated {
                ledger: path.to_path_buf(),
                keys: key_dir.to_path_buf(),
            });
        }
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A classifier's call on one public artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub predicted: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Score {
    pub total: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
    /// `(id, truth, predicted, correct)` in prediction order.
    pub rows: Vec<(String, String, String, bool)>,
}

/// Scores predictions against the ledger. Every id must have an entry.
pub fn score(predictions: &[Prediction], ledger: &Ledger) -> Result<Score> {
    let mut rows = Vec::with_capacity(predictions.len());
    for p in predictions {
        let e = ledger
            .get(&p.id)
            .ok_or_else(|| HarnessError::MissingLedgerEntry(p.id.clone()))?;
        rows.push((
            p.id.clone(),
            e.truth.clone(),
            p.predicted.clone(),
            e.truth == p.predicted,
        ));
    }
    let correct = rows.iter().filter(|r| r.3).count();
    let total = rows.len();
    Ok(Score {
        total,
        correct,
        accuracy: (total > 0).then(|| correct as f64 / total as f64),
        rows,
    })
}

/// Default ledger location for a key directory: a sibling, never inside it.
pub fn ledger_path_for(key_dir: &Path) -> PathBuf {
    let name = key_dir
        .file_name()
        .map_or("keys".into(), |s| s.to_string_lossy().into_owned());
    key_dir.with_file_name(format!("{name}.ledger.json"))
}
