use std::process::Command;

fn pseudoent() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudoent"))
}

fn write_config(dir: &std::path::Path, low_rate: f64) -> std::path::PathBuf {
    let path = dir.join("sc.toml");
    std::fs::write(
        &path,
        format!(
            "name = \"sc\"\nkind = \"singlecut\"\nseed = \"4\"\n\n[ensemble]\nn = 8\nf = 2\nkeys = 2\ncuts = [4]\n\
             low_pass_rate = {low_rate}\nhigh_pass_rate = 0.0\nsandwich_tol = 1e-9\n"
        ),
    )
    .unwrap();
    path
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = |rate: f64| {
        pseudoent()
            .args(["experiment", "singlecut", "--config"])
            .arg(write_config(dir.path(), rate))
            .arg("--out-dir")
            .arg(&out)
            .output()
            .unwrap()
    };
    let pass = run(0.0);
    assert_eq!(pass.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&pass.stderr).contains("no cryptographic hardness"));
    assert!(out.join("sc.csv").exists() && out.join("sc.summary.json").exists());
    // a low-mode pass rate of 1.1 is rejected as config, not run
    assert_eq!(run(1.1).status.code(), Some(3));
    assert_eq!(
        pseudoent()
            .arg("no-such-verb")
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
    let wrong = pseudoent()
        .args(["experiment", "qed", "--config"])
        .arg(write_config(dir.path(), 0.0))
        .output()
        .unwrap();
    assert_eq!(wrong.status.code(), Some(3));
}

#[test]
fn ledger_must_not_sit_with_keys() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("keys");
    std::fs::create_dir(&keys).unwrap();
    let sample = |ledger: &std::path::Path| {
        pseudoent()
            .args([
                "sample-key",
                "--construction",
                "single",
                "--mode",
                "high",
                "--n",
                "8",
                "--f",
                "2",
                "--seed",
                "1",
            ])
            .arg("--out")
            .arg(keys.join("k.key"))
            .arg("--ledger")
            .arg(ledger)
            .output()
            .unwrap()
    };
    assert_eq!(sample(&keys.join("ledger.json")).status.code(), Some(3));
    let ok = sample(&dir.path().join("ledger.json"));
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let profile = pseudoent()
        .args(["entropy-profile", "--key"])
        .arg(keys.join("k.key"))
        .args(["--cut", "4", "--cut", "1,3/8"])
        .output()
        .unwrap();
    let text = String::from_utf8(profile.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.starts_with("n,cut_spec,exact_s"));
}

#[test]
fn grid_rule_check() {
    let out = pseudoent()
        .args(["grid2d", "verify-rules", "--n", "2", "--cols", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["match"], true);
    assert_eq!(v["legal_shapes"], 6);
}
