//! Experiment orchestration, blinded scoring and file formats for
//! `pseudoent-core`.
//!
//! Seeds: every experiment has one master [`pseudoent_core::Seed`]. Key `i`
//! of mode `m` in a `k` experiment uses `master.derive("k/m", i)`; see
//! [`experiments`] for the other roles.

pub mod artifacts;
pub mod config;
pub mod envelope;
pub mod error;
pub mod experiments;
pub mod ledger;
pub mod parallel;
pub mod report;

pub use error::{HarnessError, Result};

/// Printed on every run and embedded in every report summary.
pub const BANNER: &str =
    "pseudoent: toy parameters for numerical study only; the keys carry no cryptographic hardness.";
