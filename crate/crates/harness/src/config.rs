//! Declarative experiment configuration (TOML).
//!
//! Every threshold and tolerance must be spelled out in the file; none has a
//! default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pseudoent_core::Seed;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Singlecut,
    Multicut,
    Lgses,
    Qed,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Singlecut => "singlecut",
            ExperimentKind::Multicut => "multicut",
            ExperimentKind::Lgses => "lgses",
            ExperimentKind::Qed => "qed",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singlecut" => Ok(ExperimentKind::Singlecut),
            "multicut" => Ok(ExperimentKind::Multicut),
            "lgses" => Ok(ExperimentKind::Lgses),
            "qed" => Ok(ExperimentKind::Qed),
            other => Err(HarnessError::Config(format!(
                "unknown experiment kind {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: Seed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qed: Option<QedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lgses: Option<LgsesConfig>,
}

/// Single-cut and multi-cut key ensembles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    pub f: usize,
    /// Keys sampled per mode.
    pub keys: usize,
    /// Prefix cut lengths. Single-cut ensembles must use `[n/2]`.
    pub cuts: Vec<usize>,
    /// Minimum fraction of low-mode keys with `S ≤ f` on every cut.
    pub low_pass_rate: f64,
    /// Minimum fraction of high-mode keys above the high threshold on every cut.
    pub high_pass_rate: f64,
    /// Slack allowed in the T-matrix sandwich check.
    pub sandwich_tol: f64,
}

/// Blinded entropy-difference pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QedConfig {
    pub n: usize,
    pub f: usize,
    pub pairs: usize,
    pub cut: usize,
    /// Entropies closer than this are reported as equal.
    pub equal_tol: f64,
    /// Minimum fraction of pairs where the high-mode key is judged larger.
    pub min_correct_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LgsesEncoding {
    Binary,
    Unary,
    Grid2d,
}

impl fmt::Display for LgsesEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LgsesEncoding::Binary => "binary",
            LgsesEncoding::Unary => "unary",
            LgsesEncoding::Grid2d => "grid2d",
        })
    }
}

/// Blinded ground-state classification of two circuit families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgsesConfig {
    pub encoding: LgsesEncoding,
    pub n: usize,
    /// Circuits per family.
    pub circuits: usize,
    /// Rounds of the entangling family.
    pub rounds: usize,
    /// Grid columns `T` (grid2d only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    /// Padding target `(K+1)/(M+K+1) ≤ epsilon` (binary and unary).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub lanczos_tol: f64,
    /// A circuit is called entangled when its statistic reaches this value.
    pub classify_threshold: f64,
    pub min_accuracy: f64,
}

fn rate(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("{name} = {v} outside [0, 1]")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Config(format!(
            "{name} = {v} must be positive"
        )))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return bad(format!(
                "name {:?} must be a nonempty file-safe token",
                self.name
            ));
        }
        let sections = [
            self.ensemble.is_some(),
            self.qed.is_some(),
            self.lgses.is_some(),
        ];
        let want = match self.kind {
            ExperimentKind::Singlecut | ExperimentKind::Multicut => 0,
            ExperimentKind::Qed => 1,
            ExperimentKind::Lgses => 2,
        };
        if !sections[want] || sections.iter().filter(|&&s| s).count() != 1 {
            let name = ["ensemble", "qed", "lgses"][want];
            return bad(format!(
                "a {} experiment takes exactly one [{name}] section",
                self.kind
            ));
        }
        if let Some(e) = &self.ensemble {
            rate("low_pass_rate", e.low_pass_rate)?;
            rate("high_pass_rate", e.high_pass_rate)?;
            if e.sandwich_tol.is_nan() || e.sandwich_tol < 0.0 {
                return bad("sandwich_tol must be nonnegative".into());
            }
            if e.cuts.is_empty() || e.cuts.iter().any(|&c| c == 0 || c >= e.n) {
                return bad(format!(
                    "cuts {:?} must be nonempty and inside 1..{}",
                    e.cuts, e.n
                ));
            }
            if self.kind == ExperimentKind::Singlecut && e.cuts != [e.n / 2] {
                return bad(format!("single-cut ensembles use cuts = [{}]", e.n / 2));
            }
        }
        if let Some(q) = &self.qed {
            rate("min_correct_rate", q.min_correct_rate)?;
            if q.equal_tol.is_nan() || q.equal_tol < 0.0 {
                return bad("equal_tol must be nonnegative".into());
            }
            if q.cut == 0 || q.cut >= q.n {
                return bad(format!("cut {} outside 1..{}", q.cut, q.n));
            }
        }
        if let Some(l) = &self.lgses {
            rate("min_accuracy", l.min_accuracy)?;
            positive("lanczos_tol", l.lanczos_tol)?;
            if l.n < 2 {
                return bad("lgses needs n ≥ 2".into());
            }
            match l.encoding {
                LgsesEncoding::Grid2d => {
                    let cols = l
                        .cols
                        .ok_or_else(|| HarnessError::Config("grid2d needs cols".into()))?;
                    if l.rounds == 0 || l.rounds > cols {
                        return bad(format!("grid2d rounds {} must lie in 1..={cols}", l.rounds));
                    }
                    if l.epsilon.is_some() {
                        return bad("epsilon applies to binary and unary encodings only".into());
                    }
                }
                _ => {
                    positive(
                        "epsilon",
                        l.epsilon
                            .ok_or_else(|| HarnessError::Config("epsilon is required".into()))?,
                    )?;
                    if l.cols.is_some() {
                        return bad("cols applies to grid2d only".into());
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
name = "sc"
kind = "singlecut"
seed = "3"

[ensemble]
n = 8
f = 2
keys = 2
cuts = [4]
low_pass_rate = 0.9
high_pass_rate = 0.9
sandwich_tol = 1e-9
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::from_toml(SINGLE).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Singlecut);
        assert_eq!(cfg.seed, Seed::from_u64(3));
        let echo = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_missing_tolerance_and_bad_sections() {
        let missing = SINGLE.replace("sandwich_tol = 1e-9\n", "");
        assert!(ExperimentConfig::from_toml(&missing).is_err());
        let unknown = SINGLE.replace("keys = 2", "keys = 2\nextra = 1");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let wrong_cut = SINGLE.replace("cuts = [4]", "cuts = [3]");
        assert!(ExperimentConfig::from_toml(&wrong_cut).is_err());
        let wrong_kind = SINGLE.replace("kind = \"singlecut\"", "kind = \"qed\"");
        assert!(ExperimentConfig::from_toml(&wrong_kind).is_err());
        let bad_rate = SINGLE.replace("low_pass_rate = 0.9", "low_pass_rate = 1.5");
        assert!(ExperimentConfig::from_toml(&bad_rate).is_err());
    }
}
