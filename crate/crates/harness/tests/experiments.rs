use pseudoent::artifacts::PublicKey;
use pseudoent::config::ExperimentConfig;
use pseudoent::experiments::{self, run_entropy_difference, DiffVerdict, ENSEMBLE_COLUMNS};
use pseudoent::ledger::{score, Ledger, Prediction};
use pseudoent::HarnessError;
use pseudoent_core::entanglement::Cut;
use pseudoent_core::phase::{sample_single_cut_key, EntanglementMode};
use pseudoent_core::Seed;

fn ensemble(kind: &str, n: usize, f: usize, keys: usize, cuts: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
name = "t"
kind = "{kind}"
seed = "5"

[ensemble]
n = {n}
f = {f}
keys = {keys}
cuts = {cuts}
low_pass_rate = 0.5
high_pass_rate = 0.5
sandwich_tol = 1e-9
"#
    ))
    .unwrap()
}

#[test]
fn zero_keys_give_header_only_report() {
    let r = experiments::run(&ensemble("singlecut", 8, 2, 0, "[4]")).unwrap();
    assert!(r.rows.is_empty());
    let csv = String::from_utf8(r.csv_bytes().unwrap()).unwrap();
    assert_eq!(csv.trim_end(), ENSEMBLE_COLUMNS.join(","));
    assert!(!r.passed());
    let summary: serde_json::Value = serde_json::from_slice(&r.summary_json().unwrap()).unwrap();
    assert!(summary["summary"]["low_pass_rate"].is_null());
}

#[test]
fn ensemble_rates_are_frequencies() {
    let r = experiments::run(&ensemble("singlecut", 8, 2, 4, "[4]")).unwrap();
    assert_eq!(r.rows.len(), 8);
    for key in ["low_pass_rate", "high_pass_rate"] {
        let v = r.summary[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
    assert_eq!(r.summary["sandwich_violations"], 0);
    let m = experiments::run(&ensemble("multicut", 8, 3, 2, "[3, 4, 5]")).unwrap();
    assert_eq!(m.rows.len(), 2 * 2 * 3);
    assert_eq!(m.summary["cut_pass_rate"].as_object().unwrap().len(), 6);
}

#[test]
fn reports_are_reproducible() {
    let cfg = ensemble("multicut", 8, 3, 3, "[3, 4, 5]");
    let (a, b) = (
        experiments::run(&cfg).unwrap(),
        experiments::run(&cfg).unwrap(),
    );
    assert_eq!(a.csv_bytes().unwrap(), b.csv_bytes().unwrap());
    assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
}

#[test]
fn identical_keys_compare_equal() {
    let (k, _) = sample_single_cut_key(EntanglementMode::High, 10, 2, &Seed::from_u64(3)).unwrap();
    let k = PublicKey::Single(k);
    let d = run_entropy_difference(&k, &k, &Cut::prefix(10, 5).unwrap(), 1e-12).unwrap();
    assert_eq!(d.verdict, DiffVerdict::Equal);
    assert_eq!(d.s_a, d.s_b);
    let other = PublicKey::Single(
        sample_single_cut_key(EntanglementMode::High, 8, 2, &Seed::from_u64(3))
            .unwrap()
            .0,
    );
    assert!(run_entropy_difference(&k, &other, &Cut::prefix(10, 5).unwrap(), 0.0).is_err());
}

#[test]
fn qed_predictions_need_the_ledger() {
    let cfg = ExperimentConfig::from_toml(
        r#"
name = "q"
kind = "qed"
seed = "9"

[qed]
n = 8
f = 2
pairs = 3
cut = 4
equal_tol = 1e-9
min_correct_rate = 0.0
"#,
    )
    .unwrap();
    let q = cfg.qed.as_ref().unwrap();
    let (pairs, ledger) = experiments::sample_qed_pairs(q, &cfg.seed).unwrap();
    assert_eq!(ledger.len(), 6);
    let calls =
        experiments::classify_pairs(&pairs, &Cut::prefix(8, 4).unwrap(), q.equal_tol).unwrap();
    let preds: Vec<Prediction> = calls.iter().flat_map(|(_, p)| p.iter().cloned()).collect();
    assert!(matches!(
        score(&preds, &Ledger::new()),
        Err(HarnessError::MissingLedgerEntry(_))
    ));
    assert_eq!(score(&preds, &ledger).unwrap().total, 6);
    let r = experiments::run(&cfg).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.passed());
}

fn lgses(encoding: &str, extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
name = "l"
kind = "lgses"
seed = "21"

[lgses]
encoding = "{encoding}"
n = 3
circuits = 2
rounds = 2
{extra}
lanczos_tol = 1e-9
classify_threshold = 0.25
min_accuracy = 1.0
"#
    ))
    .unwrap()
}

#[test]
fn lgses_encodings_classify_toy_families() {
    for (enc, extra) in [
        ("binary", "epsilon = 0.05"),
        ("unary", "epsilon = 0.05"),
        ("grid2d", "cols = 2"),
    ] {
        let r = experiments::run(&lgses(enc, extra)).unwrap();
        assert_eq!(r.rows.len(), 4 * 2, "{enc}");
        assert!(r.passed(), "{enc}: {:?}", r.summary);
        assert_eq!(r.summary["bound_failures"], 0, "{enc}");
    }
}
