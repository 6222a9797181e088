//! Experiment runners.
//!
//! Every sampled object gets its own seed, `master.derive(label, index)`,
//! where `label` names the experiment and role (for instance `singlecut/low`)
//! and `index` is the position within that role. Work runs in parallel and
//! rows are merged in index order, so reports do not depend on thread count.

use std::collections::BTreeMap;

use pseudoent_core::circuit::{random_product, random_rounds, CircuitIR, PaddedCircuit};
use pseudoent_core::clock::{build_clock_ham_in, data_register_entropy, ClockSpace};
use pseudoent_core::entanglement::{entropy_exact, entropy_report, Cut, EntropyReport};
use pseudoent_core::grid2d::{entropy_via_turns, GridCircuit, GridHistoryState};
use pseudoent_core::lanczos::{ground_state_with, LanczosOptions};
use pseudoent_core::phase::{sample_multi_cut_key, sample_single_cut_key, EntanglementMode};
use pseudoent_core::Seed;
use serde::Serialize;

use crate::artifacts::PublicKey;
use crate::config::{
    EnsembleConfig, ExperimentConfig, ExperimentKind, LgsesConfig, LgsesEncoding, QedConfig,
};
use crate::envelope::sha256_hex;
use crate::error::{HarnessError, Result};
use crate::ledger::{score, Ledger, LedgerEntry, Prediction};
use crate::parallel::par_map;
use crate::report::{cell, Comparison, Report, Verdict};

/// Numerical slack on entropy thresholds, in bits.
pub const ENTROPY_TOL: f64 = 1e-9;

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.kind {
        ExperimentKind::Singlecut | ExperimentKind::Multicut => run_ensemble(config),
        ExperimentKind::Qed => run_qed(config),
        ExperimentKind::Lgses => run_lgses(config),
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| HarnessError::Config(format!("missing [{name}] section")))
}

pub fn sample_key(
    kind: ExperimentKind,
    mode: EntanglementMode,
    n: usize,
    f: usize,
    seed: &Seed,
) -> Result<PublicKey> {
    Ok(match kind {
        ExperimentKind::Singlecut => PublicKey::Single(sample_single_cut_key(mode, n, f, seed)?.0),
        ExperimentKind::Multicut => PublicKey::Multi(sample_multi_cut_key(mode, n, f, seed)?.0),
        other => {
            return Err(HarnessError::Config(format!(
                "{other} experiments do not sample phase keys"
            )))
        }
    })
}

/// Seed of key `index` of one mode in an ensemble.
pub fn key_seed(master: &Seed, kind: ExperimentKind, mode: EntanglementMode, index: usize) -> Seed {
    master.derive(&format!("{kind}/{mode}"), index as u64)
}

/// Entropy a key of `mode` must stay below (low) or reach (high) at prefix cut `c`.
pub fn threshold(
    kind: ExperimentKind,
    mode: EntanglementMode,
    n: usize,
    f: usize,
    c: usize,
) -> f64 {
    match (mode, kind) {
        (EntanglementMode::Low, _) => f as f64,
        (EntanglementMode::High, ExperimentKind::Singlecut) => n as f64 / 8.0,
        (EntanglementMode::High, _) => c.min(n - c) as f64 / 4.0,
    }
}

pub fn meets(mode: EntanglementMode, s: f64, threshold: f64) -> bool {
    match mode {
        EntanglementMode::Low => s <= threshold + ENTROPY_TOL,
        EntanglementMode::High => s >= threshold - ENTROPY_TOL,
    }
}

/// Per-key ensemble outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyOutcome {
    pub mode: EntanglementMode,
    pub index: usize,
    pub id: String,
    pub reports: Vec<EntropyReport>,
    pub error: Option<String>,
}

fn profile(key: &PublicKey, cuts: &[usize]) -> Result<Vec<EntropyReport>> {
    let phase = key.phase_table()?;
    cuts.iter()
        .map(|&c| Ok(entropy_report(&phase, &Cut::prefix(key.n(), c)?)?))
        .collect()
}

pub const ENSEMBLE_COLUMNS: [&str; 13] = [
    "mode",
    "key_index",
    "key_id",
    "cut",
    "exact_s",
    "lower",
    "upper",
    "distinct_rows",
    "frobenius_sq",
    "threshold",
    "passed",
    "sandwich_ok",
    "error",
];

pub fn run_ensemble(config: &ExperimentConfig) -> Result<Report> {
    let e: &EnsembleConfig = section(&config.ensemble, "ensemble")?;
    let kind = config.kind;
    let modes = [EntanglementMode::Low, EntanglementMode::High];
    let outcomes = par_map(2 * e.keys, |job| {
        let (mode, index) = (modes[job / e.keys.max(1)], job % e.keys.max(1));
        let result = sample_key(
            kind,
            mode,
            e.n,
            e.f,
            &key_seed(&config.seed, kind, mode, index),
        )
        .and_then(|k| Ok((k.id(), profile(&k, &e.cuts)?)));
        match result {
            Ok((id, reports)) => KeyOutcome {
                mode,
                index,
                id,
                reports,
                error: None,
            },
            Err(err) => KeyOutcome {
                mode,
                index,
                id: String::new(),
                reports: Vec::new(),
                error: Some(err.to_string()),
            },
        }
    });

    let mut report = Report::new(config, &ENSEMBLE_COLUMNS);
    let mut sandwich_violations = 0usize;
    let mut errors = 0usize;
    let mut key_passes: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut cut_passes: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for o in &outcomes {
        let mode = o.mode.to_string();
        if let Some(err) = &o.error {
            errors += 1;
            key_passes.entry(mode.clone()).or_default().1 += 1;
            let mut row = vec![mode, o.index.to_string()];
            row.extend(std::iter::repeat_n(
                String::new(),
                ENSEMBLE_COLUMNS.len() - 3,
            ));
            row.push(err.clone());
            report.push_row(row);
            continue;
        }
        let mut all = true;
        for (&c, r) in e.cuts.iter().zip(&o.reports) {
            let thr = threshold(kind, o.mode, e.n, e.f, c);
            let passed = meets(o.mode, r.exact_s, thr);
            let sandwich = r.sandwich_holds(e.sandwich_tol);
            all &= passed;
            sandwich_violations += usize::from(!sandwich);
            let slot = cut_passes.entry(format!("{mode}/{c}")).or_default();
            slot.0 += usize::from(passed);
            slot.1 += 1;
            report.push_row(vec![
                mode.clone(),
                o.index.to_string(),
                o.id.clone(),
                c.to_string(),
                cell(r.exact_s),
                cell(r.lower),
                cell(r.upper),
                r.distinct_rows.to_string(),
                r.frobenius_sq.clone(),
                cell(thr),
                passed.to_string(),
                sandwich.to_string(),
                String::new(),
            ]);
        }
        let slot = key_passes.entry(mode).or_default();
        slot.0 += usize::from(all);
        slot.1 += 1;
    }
    let rate = |(p, t): (usize, usize)| (t > 0).then(|| p as f64 / t as f64);
    let low = key_passes.get("low").copied().and_then(rate);
    let high = key_passes.get("high").copied().and_then(rate);
    report.summarize("low_pass_rate", low);
    report.summarize("high_pass_rate", high);
    report.summarize(
        "cut_pass_rate",
        cut_passes
            .into_iter()
            .map(|(k, v)| (k, rate(v)))
            .collect::<BTreeMap<_, _>>(),
    );
    report.summarize("sandwich_violations", sandwich_violations);
    report.summarize("errors", errors);
    report.verdicts = vec![
        Verdict::new("low_pass_rate", low, Comparison::AtLeast, e.low_pass_rate),
        Verdict::new(
            "high_pass_rate",
            high,
            Comparison::AtLeast,
            e.high_pass_rate,
        ),
        Verdict::new(
            "sandwich_violations",
            Some(sandwich_violations as f64),
            Comparison::AtMost,
            0.0,
        ),
        Verdict::new("errors", Some(errors as f64), Comparison::AtMost, 0.0),
    ];
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffVerdict {
    AGreater,
    BGreater,
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyDifference {
    pub cut: String,
    pub s_a: f64,
    pub s_b: f64,
    pub verdict: DiffVerdict,
}

/// Compares `S(ρ_A)` of two public keys across the same cut.
pub fn run_entropy_difference(
    a: &PublicKey,
    b: &PublicKey,
    cut: &Cut,
    equal_tol: f64,
) -> Result<EntropyDifference> {
    if a.n() != b.n() || cut.n() != a.n() {
        return Err(HarnessError::Config(format!(
            "keys on {} and {} qubits with a {}-qubit cut",
            a.n(),
            b.n(),
            cut.n()
        )));
    }
    let s_a = entropy_exact(&a.statevector()?, cut)?;
    let s_b = if a == b {
        s_a
    } else {
        entropy_exact(&b.statevector()?, cut)?
    };
    let verdict = if (s_a - s_b).abs() <= equal_tol {
        DiffVerdict::Equal
    } else if s_a > s_b {
        DiffVerdict::AGreater
    } else {
        DiffVerdict::BGreater
    };
    Ok(EntropyDifference {
        cut: cut.to_string(),
        s_a,
        s_b,
        verdict,
    })
}

/// Public half of a blinded pair.
pub struct PublicPair {
    pub a: PublicKey,
    pub b: PublicKey,
}

/// Samples `pairs` low/high pairs in seeded order; the ledger holds which is which.
pub fn sample_qed_pairs(q: &QedConfig, master: &Seed) -> Result<(Vec<PublicPair>, Ledger)> {
    let sampled = par_map(
        q.pairs,
        |i| -> Result<(PublicPair, [(String, LedgerEntry); 2])> {
            let mut keys = Vec::with_capacity(2);
            for mode in [EntanglementMode::Low, EntanglementMode::High] {
                let seed = master.derive(&format!("qed/{mode}"), i as u64);
                let key = sample_key(ExperimentKind::Singlecut, mode, q.n, q.f, &seed)?;
                let entry = LedgerEntry {
                    truth: mode.to_string(),
                    construction: "single-cut".into(),
                    n: q.n,
                    f: Some(q.f),
                    seed,
                };
                keys.push((key, entry));
            }
            if master.derive("qed/order", i as u64).0[0] & 1 == 1 {
                keys.swap(0, 1);
            }
            let (b, eb) = keys.pop().expect("two keys");
            let (a, ea) = keys.pop().expect("two keys");
            let ids = [(a.id(), ea), (b.id(), eb)];
            Ok((PublicPair { a, b }, ids))
        },
    );
    let mut pairs = Vec::with_capacity(q.pairs);
    let mut ledger = Ledger::new();
    for s in sampled {
        let (pair, entries) = s?;
        for (id, e) in entries {
            ledger.insert(id, e);
        }
        pairs.push(pair);
    }
    Ok((pairs, ledger))
}

/// Calls the larger-entropy key of each pair `high`, using public keys only.
pub fn classify_pairs(
    pairs: &[PublicPair],
    cut: &Cut,
    equal_tol: f64,
) -> Result<Vec<(EntropyDifference, [Prediction; 2])>> {
    par_map(pairs.len(), |i| {
        let p = &pairs[i];
        let d = run_entropy_difference(&p.a, &p.b, cut, equal_tol)?;
        let (la, lb) = match d.verdict {
            DiffVerdict::AGreater => ("high", "low"),
            DiffVerdict::BGreater => ("low", "high"),
            DiffVerdict::Equal => ("equal", "equal"),
        };
        let preds = [
            Prediction {
                id: p.a.id(),
                predicted: la.into(),
            },
            Prediction {
                id: p.b.id(),
                predicted: lb.into(),
            },
        ];
        Ok((d, preds))
    })
    .into_iter()
    .collect()
}

pub const QED_COLUMNS: [&str; 9] = [
    "pair", "key_a", "key_b", "s_a", "s_b", "gap", "verdict", "truth_a", "correct",
];

pub fn run_qed(config: &ExperimentConfig) -> Result<Report> {
    let q = section(&config.qed, "qed")?;
    let (pairs, ledger) = sample_qed_pairs(q, &config.seed)?;
    let cut = Cut::prefix(q.n, q.cut)?;
    let calls = classify_pairs(&pairs, &cut, q.equal_tol)?;
    let preds: Vec<Prediction> = calls.iter().flat_map(|(_, p)| p.iter().cloned()).collect();
    let scored = score(&preds, &ledger)?;
    let mut report = Report::new(config, &QED_COLUMNS);
    let mut correct = 0usize;
    let mut gaps = Vec::with_capacity(pairs.len());
    for (i, ((d, _), rows)) in calls.iter().zip(scored.rows.chunks(2)).enumerate() {
        let ok = rows.iter().all(|r| r.3);
        correct += usize::from(ok);
        let gap = (d.s_a - d.s_b).abs();
        gaps.push(gap);
        report.push_row(vec![
            i.to_string(),
            rows[0].0.clone(),
            rows[1].0.clone(),
            cell(d.s_a),
            cell(d.s_b),
            cell(gap),
            serde_json::to_value(d.verdict)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            rows[0].1.clone(),
            ok.to_string(),
        ]);
    }
    let rate = (!pairs.is_empty()).then(|| correct as f64 / pairs.len() as f64);
    report.summarize("correct_rate", rate);
    report.summarize(
        "mean_gap",
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
    );
    report.summarize("pairs", pairs.len());
    report.verdicts = vec![Verdict::new(
        "correct_rate",
        rate,
        Comparison::AtLeast,
        q.min_correct_rate,
    )];
    Ok(report)
}

/// A circuit as the classifier sees it.
pub struct PublicCircuit {
    pub id: String,
    pub circuit: CircuitIR,
}

/// Samples `circuits` product and `circuits` entangling circuits, shuffled by a seeded coin per index.
pub fn sample_lgses_circuits(
    l: &LgsesConfig,
    master: &Seed,
) -> Result<(Vec<PublicCircuit>, Ledger)> {
    let mut public = Vec::with_capacity(2 * l.circuits);
    let mut ledger = Ledger::new();
    for i in 0..l.circuits {
        let ps = master.derive("lgses/product", i as u64);
        let es = master.derive("lgses/entangled", i as u64);
        let mut both = vec![
            ("product", random_product(l.n, ps)?, ps),
            ("entangled", random_rounds(l.n, l.rounds, es)?, es),
        ];
        if master.derive("lgses/order", i as u64).0[0] & 1 == 1 {
            both.swap(0, 1);
        }
        for (truth, circuit, seed) in both {
            let id = sha256_hex(circuit.to_json().as_bytes())[..16].to_string();
            let construction = format!("{truth}/{}", l.encoding);
            ledger.insert(
                id.clone(),
                LedgerEntry {
                    truth: truth.into(),
                    construction,
                    n: l.n,
                    f: None,
                    seed,
                },
            );
            public.push(PublicCircuit { id, circuit });
        }
    }
    Ok((public, ledger))
}

/// Per-cut diagnostics of one ground state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutRow {
    pub cut: usize,
    /// Entropy of the ground state across the cut (data qubits `1..=c` or grid rows `1..=c`).
    pub entropy: f64,
    /// Coherent information (clock encodings) or turn-formula entropy (grid).
    pub secondary: f64,
    pub output_entropy: f64,
    /// Fannes and AFW checks (clock) or the `(1−1/n)` and mixing bounds (grid).
    pub bound_ok: bool,
    /// Data trace distance (clock) or mixing term (grid).
    pub slack: f64,
}

/// Ground-state statistics of one public circuit.
pub fn analyse_circuit(circuit: &CircuitIR, l: &LgsesConfig, seed: &Seed) -> Result<Vec<CutRow>> {
    let n = circuit.n();
    match l.encoding {
        LgsesEncoding::Binary | LgsesEncoding::Unary => {
            let enc = match l.encoding {
                LgsesEncoding::Binary => pseudoent_core::circuit::ClockEncoding::Binary,
                _ => pseudoent_core::circuit::ClockEncoding::Unary,
            };
            let eps = l
                .epsilon
                .ok_or_else(|| HarnessError::Config("clock encodings need epsilon".into()))?;
            let padded = PaddedCircuit::with_target(circuit.clone(), None, eps)?;
            let space = ClockSpace::compact(enc, padded.total());
            let h = build_clock_ham_in(&padded, space)?;
            let opts = LanczosOptions {
                tol: l.lanczos_tol,
                seed: *seed,
                ..LanczosOptions::default()
            };
            let gs = ground_state_with(&h, &opts)?;
            let out = circuit.output_state()?;
            (1..n)
                .map(|c| {
                    let r = data_register_entropy(&gs.vector, &out, n, &Cut::prefix(n, c)?)?;
                    Ok(CutRow {
                        cut: c,
                        entropy: r.entropy,
                        secondary: r.coherent_information,
                        output_entropy: r.output_entropy,
                        bound_ok: r.fannes_holds() && r.afw_holds(),
                        slack: r.data_trace_distance,
                    })
                })
                .collect()
        }
        LgsesEncoding::Grid2d => {
            let cols = l
                .cols
                .ok_or_else(|| HarnessError::Config("grid2d needs cols".into()))?;
            let hist = GridHistoryState::new(GridCircuit::new(circuit, cols)?)?;
            (1..n)
                .map(|c| {
                    let te = entropy_via_turns(&hist, c)?;
                    let direct = hist.entropy_direct(c)?;
                    Ok(CutRow {
                        cut: c,
                        entropy: direct,
                        secondary: te.total,
                        output_entropy: te.output_entropy,
                        bound_ok: te.lower_bound() <= direct + ENTROPY_TOL
                            && direct <= te.upper_bound() + ENTROPY_TOL,
                        slack: te.mixing,
                    })
                })
                .collect()
        }
    }
}

/// The classifier statistic: the largest per-cut value of the coherent
/// information (clock encodings, near zero for product outputs) or of the
/// ground-state entropy (grid).
pub fn statistic(rows: &[CutRow], encoding: LgsesEncoding) -> f64 {
    let pick = |r: &CutRow| {
        if encoding == LgsesEncoding::Grid2d {
            r.entropy
        } else {
            r.secondary
        }
    };
    rows.iter().map(pick).fold(f64::NEG_INFINITY, f64::max)
}

/// Classifies public circuits without the ledger.
pub fn classify_circuits(
    public: &[PublicCircuit],
    l: &LgsesConfig,
    master: &Seed,
) -> Result<Vec<(Vec<CutRow>, Prediction)>> {
    // the grid history carries clock mixing even for the identity circuit
    let baseline = match l.encoding {
        LgsesEncoding::Grid2d => statistic(
            &analyse_circuit(&CircuitIR::new(l.n, Vec::new())?, l, master)?,
            l.encoding,
        ),
        _ => 0.0,
    };
    par_map(public.len(), |i| {
        let p = &public[i];
        let rows = analyse_circuit(&p.circuit, l, &master.derive("lgses/lanczos", i as u64))?;
        let label = if statistic(&rows, l.encoding) - baseline >= l.classify_threshold {
            "entangled"
        } else {
            "product"
        };
        Ok((
            rows,
            Prediction {
                id: p.id.clone(),
                predicted: label.into(),
            },
        ))
    })
    .into_iter()
    .collect()
}

pub const LGSES_COLUMNS: [&str; 10] = [
    "circuit",
    "cut",
    "entropy",
    "secondary",
    "output_entropy",
    "bound_ok",
    "slack",
    "statistic",
    "predicted",
    "truth",
];

pub fn run_lgses(config: &ExperimentConfig) -> Result<Report> {
    let l = section(&config.lgses, "lgses")?;
    let (public, ledger) = sample_lgses_circuits(l, &config.seed)?;
    let calls = classify_circuits(&public, l, &config.seed)?;
    let preds: Vec<Prediction> = calls.iter().map(|(_, p)| p.clone()).collect();
    let scored = score(&preds, &ledger)?;
    let mut report = Report::new(config, &LGSES_COLUMNS);
    let mut bound_failures = 0usize;
    for ((rows, pred), s) in calls.iter().zip(&scored.rows) {
        let stat = statistic(rows, l.encoding);
        for r in rows {
            bound_failures += usize::from(!r.bound_ok);
            report.push_row(vec![
                pred.id.clone(),
                r.cut.to_string(),
                cell(r.entropy),
                cell(r.secondary),
                cell(r.output_entropy),
                r.bound_ok.to_string(),
                cell(r.slack),
                cell(stat),
                pred.predicted.clone(),
                s.1.clone(),
            ]);
        }
    }
    report.summarize("accuracy", scored.accuracy);
    report.summarize("circuits", scored.total);
    report.summarize("bound_failures", bound_failures);
    report.verdicts = vec![Verdict::new(
        "accuracy",
        scored.accuracy,
        Comparison::AtLeast,
        l.min_accuracy,
    )];
    Ok(report)
}
