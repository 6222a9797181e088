use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pseudoent::artifacts::{self, PublicKey};
use pseudoent::config::{ExperimentConfig, ExperimentKind};
use pseudoent::experiments::{self, run_entropy_difference};
use pseudoent::ledger::{Ledger, LedgerEntry};
use pseudoent::{envelope, HarnessError, Result, BANNER};
use pseudoent_core::circuit::{ClockEncoding, PaddedCircuit};
use pseudoent_core::clock::{build_clock_ham_in, ClockSpace};
use pseudoent_core::entanglement::{entropy_report, rank, t_matrix, Cut};
use pseudoent_core::grid2d::{self, GridCircuit, GridHistoryState};
use pseudoent_core::lanczos::{ground_state_with, LanczosOptions};
use pseudoent_core::lossy::{sample_function_key, KeyOverrides, Mode};
use pseudoent_core::phase::EntanglementMode;
use pseudoent_core::Seed;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "pseudoent",
    version,
    about = "Phase-state pseudoentanglement experiments at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    Single,
    Multi,
    Function,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Binary,
    Unary,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a key and write it as an envelope.
    SampleKey(SampleKeyArgs),
    /// Build the phase state of a key.
    Statevector {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact entropy and T-matrix bounds per cut, as CSV.
    EntropyProfile {
        #[arg(long)]
        key: PathBuf,
        /// Prefix length `c` or a cut such as `1-3,7/8`; repeatable.
        #[arg(long = "cut", required = true)]
        cuts: Vec<String>,
    },
    /// Rank, distinct rows and Frobenius norm of the T matrix.
    TmatrixStats {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        cut: String,
    },
    /// Which of two keys has the larger entropy across a cut.
    EntropyDiff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        cut: String,
        #[arg(long, default_value_t = 1e-9)]
        equal_tol: f64,
    },
    /// Clock Hamiltonian of a circuit on the compact clock space.
    BuildHam {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum)]
        encoding: Encoding,
        /// Identity padding `M`; otherwise chosen from `--epsilon`.
        #[arg(long)]
        padding: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lanczos ground state of an operator envelope.
    GroundState {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value = "0")]
        seed: Seed,
        /// Write the ground vector as a state envelope (complex amplitudes, no qubit structure check).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-dimensional clock construction.
    Grid2d {
        #[command(subcommand)]
        command: GridCommand,
    },
    /// Run a configured experiment and write its report pair.
    Experiment {
        kind: ExperimentKind,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SampleKeyArgs {
    #[arg(long, value_enum)]
    construction: Construction,
    /// `low`/`high` for phase keys, `injective`/`lossy` for function keys.
    #[arg(long)]
    mode: String,
    /// Qubits (phase keys) or input bits `m` (function keys).
    #[arg(long)]
    n: usize,
    /// Entanglement budget `f` (phase keys) or lossiness `ℓ` (function keys).
    #[arg(long)]
    f: usize,
    /// Hash independence for function keys.
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long)]
    seed: Seed,
    #[arg(long)]
    out: PathBuf,
    /// Record the ground truth here; must lie outside the key directory.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GridCommand {
    /// Assemble H_2D over all 9^(nT) configurations.
    Build {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        cols: usize,
        /// Defaults to 1/L.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare rule-satisfying skeletons with the legal shapes.
    VerifyRules {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cols: usize,
    },
    /// Lanczos ground state of H_2D against the structured history state.
    GroundCheck {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "0")]
        seed: Seed,
    },
    /// Turn decomposition of the history-state entropy below row `cut`.
    Entropy {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        cut: usize,
    },
}

fn parse_cut(spec: &str, n: usize) -> Result<Cut> {
    if spec.contains('/') {
        Ok(spec.parse()?)
    } else {
        let c = spec
            .parse::<usize>()
            .map_err(|e| HarnessError::Config(format!("cut {spec:?}: {e}")))?;
        Ok(Cut::prefix(n, c)?)
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn parse_mode<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e: T::Err| HarnessError::Config(e.to_string()))
}

fn sample_key(a: &SampleKeyArgs) -> Result<()> {
    let (id, truth, name) = match a.construction {
        Construction::Function => {
            let mode: Mode = parse_mode(&a.mode)?;
            let (key, _) =
                sample_function_key(mode, a.n, a.f, a.r, &a.seed, &KeyOverrides::default())?;
            let env = artifacts::function_key_envelope(&key);
            std::fs::write(&a.out, &env).map_err(|e| HarnessError::Io {
                path: a.out.clone(),
                source: e,
            })?;
            (
                envelope::sha256_hex(&env)[..16].to_string(),
                mode.to_string(),
                "function",
            )
        }
        Construction::Single | Construction::Multi => {
            let mode: EntanglementMode = parse_mode(&a.mode)?;
            let (kind, name) = match a.construction {
                Construction::Single => (ExperimentKind::Singlecut, "single-cut"),
                _ => (ExperimentKind::Multicut, "multi-cut"),
            };
            let key = experiments::sample_key(kind, mode, a.n, a.f, &a.seed)?;
            key.save(&a.out)?;
            (key.id(), mode.to_string(), name)
        }
    };
    if let Some(path) = &a.ledger {
        let mut l = if path.exists() {
            Ledger::load(path)?
        } else {
            Ledger::new()
        };
        let entry = LedgerEntry {
            truth,
            construction: name.into(),
            n: a.n,
            f: Some(a.f),
            seed: a.seed,
        };
        l.insert(id.clone(), entry);
        let key_dir = a
            .out
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        l.save(path, key_dir)?;
    }
    print_json(&json!({ "id": id, "path": a.out }))
}

fn load_padded(circuit: &Path, padding: Option<usize>, epsilon: f64) -> Result<PaddedCircuit> {
    Ok(PaddedCircuit::with_target(
        artifacts::load_circuit(circuit)?,
        padding,
        epsilon,
    )?)
}

fn grid_history(circuit: &Path, cols: usize) -> Result<GridHistoryState> {
    Ok(GridHistoryState::new(GridCircuit::new(
        &artifacts::load_circuit(circuit)?,
        cols,
    )?)?)
}

/// `Ok(true)` when every configured threshold passed.
fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::SampleKey(args) => sample_key(&args)?,
        Command::Statevector { key, out } => {
            let state = PublicKey::load(&key)?.statevector()?.to_complex();
            std::fs::write(&out, artifacts::state_envelope(&state)).map_err(|e| {
                HarnessError::Io {
                    path: out,
                    source: e,
                }
            })?;
        }
        Command::EntropyProfile { key, cuts } => {
            let key = PublicKey::load(&key)?;
            let phase = key.phase_table()?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for spec in &cuts {
                w.serialize(entropy_report(&phase, &parse_cut(spec, key.n())?)?)?;
            }
            w.flush().map_err(|e| HarnessError::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
        Command::TmatrixStats { key, cut } => {
            let key = PublicKey::load(&key)?;
            let phase = key.phase_table()?;
            let cut = parse_cut(&cut, key.n())?;
            let report = entropy_report(&phase, &cut)?;
            let r = rank(&t_matrix(&phase, &cut)?);
            print_json(&json!({ "report": report, "rank": r }))?;
        }
        Command::EntropyDiff {
            a,
            b,
            cut,
            equal_tol,
        } => {
            let (a, b) = (PublicKey::load(&a)?, PublicKey::load(&b)?);
            let d = run_entropy_difference(&a, &b, &parse_cut(&cut, a.n())?, equal_tol)?;
            print_json(&serde_json::to_value(d)?)?;
        }
        Command::BuildHam {
            circuit,
            encoding,
            padding,
            epsilon,
            out,
        } => {
            let padded = load_padded(&circuit, padding, epsilon)?;
            let enc = match encoding {
                Encoding::Binary => ClockEncoding::Binary,
                Encoding::Unary => ClockEncoding::Unary,
            };
            let h = build_clock_ham_in(&padded, ClockSpace::compact(enc, padded.total()))?;
            std::fs::write(&out, artifacts::operator_envelope(&h)).map_err(|e| {
                HarnessError::Io {
                    path: out,
                    source: e,
                }
            })?;
            print_json(
                &json!({ "dim": h.dim(), "nnz": h.nnz(), "padding": padded.m(), "total": padded.total() }),
            )?;
        }
        Command::GroundState {
            operator,
            tol,
            seed,
            out,
        } => {
            let bytes = std::fs::read(&operator).map_err(|e| HarnessError::Io {
                path: operator,
                source: e,
            })?;
            let h = artifacts::operator_from_envelope(&bytes)?;
            let gs = ground_state_with(
                &h,
                &LanczosOptions {
                    tol,
                    seed,
                    ..LanczosOptions::default()
                },
            )?;
            if let Some(out) = out {
                let text = serde_json::to_vec(
                    &gs.vector.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                )?;
                envelope::write(&out, envelope::kind::STATE, &text)?;
            }
            print_json(&json!({
                "energy": gs.energy,
                "gap": gs.gap,
                "residual": gs.residual,
                "iterations": gs.iterations,
                "shift_inverted": gs.shift_inverted,
            }))?;
        }
        Command::Grid2d { command } => return grid(command),
        Command::Experiment {
            kind,
            config,
            out_dir,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            if cfg.kind != kind {
                return Err(HarnessError::Config(format!(
                    "config is a {} experiment, not {kind}",
                    cfg.kind
                )));
            }
            let report = experiments::run(&cfg)?;
            let dir = out_dir
                .or(cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let (csv, summary) = report.write(&dir)?;
            for v in &report.verdicts {
                println!(
                    "{} {} value={:?} threshold={}",
                    if v.passed { "PASS" } else { "FAIL" },
                    v.name,
                    v.value,
                    v.threshold
                );
            }
            println!("wrote {} and {}", csv.display(), summary.display());
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn grid(cmd: GridCommand) -> Result<bool> {
    match cmd {
        GridCommand::Build {
            circuit,
            cols,
            epsilon,
            out,
        } => {
            let gc = GridCircuit::new(&artifacts::load_circuit(&circuit)?, cols)?;
            let eps = epsilon.unwrap_or_else(|| grid2d::default_epsilon(gc.length()));
            let h = grid2d::assemble_h2d(&gc, eps)?;
            std::fs::write(&out, artifacts::operator_envelope(&h)).map_err(|e| {
                HarnessError::Io {
                    path: out,
                    source: e,
                }
            })?;
            print_json(
                &json!({ "dim": h.dim(), "nnz": h.nnz(), "length": gc.length(), "epsilon": eps }),
            )?;
        }
        GridCommand::VerifyRules { n, cols } => {
            let ok = grid2d::rules_match_shapes(n, cols)?;
            print_json(
                &json!({ "n": n, "cols": cols, "legal_shapes": grid2d::legal_shapes(n, cols)?.len(), "match": ok }),
            )?;
            return Ok(ok);
        }
        GridCommand::GroundCheck {
            circuit,
            cols,
            epsilon,
            tol,
            seed,
        } => {
            let hist = grid_history(&circuit, cols)?;
            let eps = epsilon.unwrap_or_else(|| grid2d::default_epsilon(hist.length()));
            let gc = grid2d::ground_check(&hist, eps, tol, seed)?;
            print_json(&json!({
                "dim": gc.dim,
                "coupling": gc.coupling,
                "lambda_min": gc.lambda_min,
                "gap": gc.gap,
                "history_energy": gc.history_energy,
                "overlap": gc.overlap,
                "block_diagonal": gc.block_diagonal,
                "residual": gc.residual,
            }))?;
        }
        GridCommand::Entropy { circuit, cols, cut } => {
            let hist = grid_history(&circuit, cols)?;
            let te = grid2d::entropy_via_turns(&hist, cut)?;
            let direct = hist.entropy_direct(cut)?;
            print_json(&json!({
                "cut": cut,
                "turns": te.turns.len(),
                "turn_entropies": te.turn_entropies,
                "weights": te.weights,
                "mixing": te.mixing,
                "turn_formula": te.total,
                "direct": direct,
                "output_entropy": te.output_entropy,
                "lower_bound": te.lower_bound(),
                "upper_bound": te.upper_bound(),
            }))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    eprintln!("{BANNER}");
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
