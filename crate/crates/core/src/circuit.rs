//! Gate-list circuits, round normalization and identity padding.
//!
//! Wires are numbered from 1 and wire 1 is the most significant bit of a basis
//! index. A gate on wires `[a, b]` has a 4×4 matrix indexed by `2·x_a + x_b`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{budget, invalid, Error, Result};
use crate::seed::Seed;
use crate::state::MAX_DENSE_QUBITS;
use crate::C64;

pub const UNITARITY_TOL: f64 = 1e-10;
pub const CIRCUIT_FORMAT_VERSION: u32 = 1;
/// Largest register for which a dense unitary is built.
pub const MAX_UNITARY_QUBITS: usize = 12;

const fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    wires: Vec<usize>,
    /// Row-major `2^k × 2^k` matrix.
    matrix: Vec<C64>,
}

impl Gate {
    pub fn new(wires: Vec<usize>, matrix: Vec<C64>) -> Result<Self> {
        let k = wires.len();
        if k == 0 || k > 2 {
            return Err(Error::UnsupportedArity(k));
        }
        if k == 2 && wires[0] == wires[1] {
            return Err(invalid(format!("gate repeats wire {}", wires[0])));
        }
        if wires.contains(&0) {
            return Err(invalid("wires are numbered from 1"));
        }
        let d = 1 << k;
        if matrix.len() != d * d {
            return Err(invalid(format!(
                "{k}-qubit gate needs {} entries, got {}",
                d * d,
                matrix.len()
            )));
        }
        let g = Gate { wires, matrix };
        let defect = g.unitarity_defect();
        if !(defect <= UNITARITY_TOL) {
            return Err(Error::NonPhysical(format!(
                "gate is not unitary (defect {defect:e})"
            )));
        }
        Ok(g)
    }

    pub fn identity(wire: usize) -> Self {
        Gate {
            wires: vec![wire],
            matrix: vec![c(1.0), c(0.0), c(0.0), c(1.0)],
        }
    }

    /// A named standard gate: I, X, Y, Z, H, S, T, CNOT, CZ, SWAP.
    pub fn named(name: &str, wires: Vec<usize>) -> Result<Self> {
        let (o, l, i) = (c(0.0), c(1.0), C64::new(0.0, 1.0));
        let h = c(FRAC_1_SQRT_2);
        let m = match name.to_ascii_uppercase().as_str() {
            "I" => vec![l, o, o, l],
            "X" => vec![o, l, l, o],
            "Y" => vec![o, -i, i, o],
            "Z" => vec![l, o, o, -l],
            "H" => vec![h, h, h, -h],
            "S" => vec![l, o, o, i],
            "T" => vec![l, o, o, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
            "CNOT" | "CX" => vec![l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o],
            "CZ" => vec![l, o, o, o, o, l, o, o, o, o, l, o, o, o, o, -l],
            "SWAP" => swap_matrix(),
            other => return Err(invalid(format!("unknown gate name {other:?}"))),
        };
        let expected = if m.len() == 4 { 1 } else { 2 };
        if wires.len() != expected {
            return Err(invalid(format!(
                "{name} acts on {expected} wire(s), got {}",
                wires.len()
            )));
        }
        Gate::new(wires, m)
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }

    pub fn arity(&self) -> usize {
        self.wires.len()
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[row * (1 << self.arity()) + col]
    }

    pub fn is_identity(&self) -> bool {
        let d = 1 << self.arity();
        (0..d).all(|r| (0..d).all(|cc| self.entry(r, cc) == if r == cc { c(1.0) } else { c(0.0) }))
    }

    pub fn unitarity_defect(&self) -> f64 {
        let d = 1 << self.arity();
        let u = DMatrix::from_row_slice(d, d, &self.matrix);
        (u.adjoint() * &u - DMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Applies the gate in place to an `n`-qubit amplitude vector.
    pub fn apply(&self, n: usize, amps: &mut [C64]) {
        debug_assert_eq!(amps.len(), 1 << n);
        match *self.wires.as_slice() {
            [w] => {
                let s = 1usize << (n - w);
                let m = &self.matrix;
                for base in 0..amps.len() {
                    if base & s != 0 {
                        continue;
                    }
                    let (a0, a1) = (amps[base], amps[base | s]);
                    amps[base] = m[0] * a0 + m[1] * a1;
                    amps[base | s] = m[2] * a0 + m[3] * a1;
                }
            }
            [wa, wb] => {
                let (sa, sb) = (1usize << (n - wa), 1usize << (n - wb));
                let idx = [0, sb, sa, sa | sb];
                let m = &self.matrix;
                for base in 0..amps.len() {
                    if base & (sa | sb) != 0 {
                        continue;
                    }
                    let v = idx.map(|o| amps[base | o]);
                    for (r, &o) in idx.iter().enumerate() {
                        amps[base | o] = (0..4).map(|k| m[r * 4 + k] * v[k]).sum();
                    }
                }
            }
            _ => unreachable!("arity checked on construction"),
        }
    }

    /// The same operation with the wire order reversed.
    fn flipped(&self) -> Gate {
        debug_assert_eq!(self.arity(), 2);
        let p = [0usize, 2, 1, 3];
        let matrix = (0..16)
            .map(|k| self.matrix[p[k / 4] * 4 + p[k % 4]])
            .collect();
        Gate {
            wires: vec![self.wires[1], self.wires[0]],
            matrix,
        }
    }

    /// `I ⊗ U` on `(w − 1, w)` for a one-qubit gate `U` on `w`.
    fn widened_left(&self) -> Gate {
        let w = self.wires[0];
        let mut matrix = vec![c(0.0); 16];
        for blk in 0..2 {
            for r in 0..2 {
                for cc in 0..2 {
                    matrix[(2 * blk + r) * 4 + 2 * blk + cc] = self.matrix[r * 2 + cc];
                }
            }
        }
        Gate {
            wires: vec![w - 1, w],
            matrix,
        }
    }
}

fn swap_matrix() -> Vec<C64> {
    let mut m = vec![c(0.0); 16];
    for (r, cc) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        m[r * 4 + cc] = c(1.0);
    }
    m
}

fn swap(a: usize, b: usize) -> Gate {
    Gate {
        wires: vec![a, b],
        matrix: swap_matrix(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitIR {
    n: usize,
    gates: Vec<Gate>,
    /// Set by [`normalize_rounds`]: gates come in rounds of `n` slots.
    round_size: Option<usize>,
}

impl CircuitIR {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("circuit needs at least one wire"));
        }
        for g in &gates {
            if let Some(&w) = g.wires().iter().find(|&&w| w > n) {
                return Err(Error::OutOfRange { index: w, max: n });
            }
        }
        Ok(CircuitIR {
            n,
            gates,
            round_size: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn round_size(&self) -> Option<usize> {
        self.round_size
    }

    /// Number of rounds when normalized.
    pub fn rounds(&self) -> Option<usize> {
        self.round_size.map(|s| self.gates.len() / s)
    }

    /// Gate in round `r` (0-based), slot `s` (0 = wire 1, `k ≥ 1` = wires `(k, k+1)`).
    pub fn slot(&self, r: usize, s: usize) -> Option<&Gate> {
        let size = self.round_size?;
        (s < size).then(|| self.gates.get(r * size + s)).flatten()
    }

    /// Output state `U_K ⋯ U_1 |0^n⟩`.
    pub fn output_state(&self) -> Result<Vec<C64>> {
        Ok(self.states()?.pop().expect("at least the initial state"))
    }

    /// `U_t ⋯ U_1 |0^n⟩` for `t = 0..=K`.
    pub fn states(&self) -> Result<Vec<Vec<C64>>> {
        budget(
            "circuit register (qubits)",
            self.n as u128,
            MAX_DENSE_QUBITS as u128,
        )?;
        let mut psi = vec![c(0.0); 1 << self.n];
        psi[0] = c(1.0);
        let mut out = Vec::with_capacity(self.gates.len() + 1);
        out.push(psi.clone());
        for g in &self.gates {
            g.apply(self.n, &mut psi);
            out.push(psi.clone());
        }
        Ok(out)
    }

    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        budget(
            "dense unitary (qubits)",
            self.n as u128,
            MAX_UNITARY_QUBITS as u128,
        )?;
        let d = 1 << self.n;
        let mut u = DMatrix::<C64>::zeros(d, d);
        let mut col = vec![c(0.0); d];
        for j in 0..d {
            col.fill(c(0.0));
            col[j] = c(1.0);
            for g in &self.gates {
                g.apply(self.n, &mut col);
            }
            u.set_column(j, &nalgebra::DVector::from_column_slice(&col));
        }
        Ok(u)
    }

    pub fn to_json(&self) -> String {
        let file = CircuitFile {
            version: CIRCUIT_FORMAT_VERSION,
            n: self.n,
            round_size: self.round_size,
            gates: self
                .gates
                .iter()
                .map(|g| GateEntry {
                    wires: g.wires.clone(),
                    name: None,
                    matrix: Some(
                        g.matrix
                            .chunks(1 << g.arity())
                            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                            .collect(),
                    ),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("circuit serializes")
    }

    /// Parses the JSON form. Gates may give either `"gate": name` or a `"matrix"`
    /// of `[re, im]` pairs.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CircuitFile =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        if file.version != CIRCUIT_FORMAT_VERSION {
            return Err(Error::Decode(format!(
                "unsupported circuit version {}",
                file.version
            )));
        }
        let gates = file
            .gates
            .into_iter()
            .map(|e| match (e.name, e.matrix) {
                (Some(name), None) => Gate::named(&name, e.wires),
                (None, Some(rows)) => Gate::new(
                    e.wires,
                    rows.into_iter()
                        .flatten()
                        .map(|[re, im]| C64::new(re, im))
                        .collect(),
                ),
                _ => Err(Error::Decode(
                    "each gate needs exactly one of \"gate\" and \"matrix\"".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ir = CircuitIR::new(file.n, gates)?;
        if let Some(size) = file.round_size {
            if size != ir.n || ir.gates.len() % size != 0 || !ir.is_round_shaped() {
                return Err(Error::Decode(
                    "round_size given but gates are not in rounds".into(),
                ));
            }
            ir.round_size = Some(size);
        }
        Ok(ir)
    }

    fn is_round_shaped(&self) -> bool {
        self.gates.iter().enumerate().all(|(i, g)| {
            let s = i % self.n;
            if s == 0 {
                g.wires == [1]
            } else {
                g.wires == [s, s + 1]
            }
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    version: u32,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    round_size: Option<usize>,
    gates: Vec<GateEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateEntry {
    wires: Vec<usize>,
    #[serde(default, rename = "gate", skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
}

/// Rewrites `circuit` into rounds: slot 0 acts on wire 1, slot `k` on wires
/// `(k, k+1)`. One-qubit gates off wire 1 become `I ⊗ U` on `(w−1, w)`,
/// non-adjacent pairs are routed with adjacent SWAPs, and unused slots hold
/// identities.
pub fn normalize_rounds(circuit: &CircuitIR) -> Result<CircuitIR> {
    let n = circuit.n;
    let mut slotted: Vec<(usize, Gate)> = Vec::new();
    for g in &circuit.gates {
        match *g.wires() {
            [1] => slotted.push((0, g.clone())),
            [_] => {
                let w = g.widened_left();
                slotted.push((w.wires[0], w));
            }
            [a, b] => {
                let (lo, hi) = (a.min(b), a.max(b));
                let route: Vec<Gate> = (lo + 1..hi).rev().map(|k| swap(k, k + 1)).collect();
                slotted.extend(route.iter().map(|s| (s.wires[0], s.clone())));
                // the qubit from `hi` now sits at `lo + 1`
                let moved = Gate {
                    wires: vec![
                        if a == lo { lo } else { lo + 1 },
                        if b == lo { lo } else { lo + 1 },
                    ],
                    matrix: g.matrix.clone(),
                };
                let moved = if a < b { moved } else { moved.flipped() };
                slotted.push((lo, moved));
                slotted.extend(route.iter().rev().map(|s| (s.wires[0], s.clone())));
            }
            _ => return Err(Error::UnsupportedArity(g.arity())),
        }
    }
    let mut gates: Vec<Gate> = Vec::new();
    let mut pos = n; // next free slot in the current round; n forces a new round
    for (slot, g) in slotted {
        if slot < pos {
            // close the current round and open a new one
            if pos < n {
                gates.extend((pos..n).map(slot_identity));
            }
            pos = 0;
        }
        gates.extend((pos..slot).map(slot_identity));
        gates.push(g);
        pos = slot + 1;
    }
    if pos < n {
        gates.extend((pos..n).map(slot_identity));
    }
    Ok(CircuitIR {
        n,
        gates,
        round_size: Some(n),
    })
}

fn slot_identity(s: usize) -> Gate {
    if s == 0 {
        Gate::identity(1)
    } else {
        Gate {
            wires: vec![s, s + 1],
            matrix: (0..16)
                .map(|k| c(if k % 5 == 0 { 1.0 } else { 0.0 }))
                .collect(),
        }
    }
}

/// A circuit followed by `m` identity gates.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedCircuit {
    base: CircuitIR,
    m: usize,
    pad: Gate,
}

impl PaddedCircuit {
    pub fn new(base: CircuitIR, m: usize) -> Self {
        PaddedCircuit {
            base,
            m,
            pad: Gate::identity(1),
        }
    }

    /// Pads with `m` identities, or with the smallest `m` such that
    /// `(K+1)/(M+K+1) ≤ epsilon` when `m` is `None`.
    pub fn with_target(base: CircuitIR, m: Option<usize>, epsilon: f64) -> Result<Self> {
        let m = match m {
            Some(m) => m,
            None => default_padding(base.len(), epsilon)?,
        };
        Ok(PaddedCircuit::new(base, m))
    }

    pub fn base(&self) -> &CircuitIR {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn k(&self) -> usize {
        self.base.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total gate count `T = K + M`.
    pub fn total(&self) -> usize {
        self.k() + self.m
    }

    /// Gate `U_t`, `1 ≤ t ≤ T`.
    pub fn gate(&self, t: usize) -> &Gate {
        assert!(
            (1..=self.total()).contains(&t),
            "gate index {t} outside 1..={}",
            self.total()
        );
        self.base.gates.get(t - 1).unwrap_or(&self.pad)
    }

    /// `U_t ⋯ U_1 |0^n⟩` for `t = 0..=K`; later states equal the last one.
    pub fn unpadded_states(&self) -> Result<Vec<Vec<C64>>> {
        self.base.states()
    }
}

/// Smallest `M` with `(K+1)/(M+K+1) ≤ epsilon`.
pub fn default_padding(k: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("padding target {epsilon} outside (0, 1]")));
    }
    let need = ((k + 1) as f64 / epsilon).ceil() as usize;
    let mut m = need.saturating_sub(k + 1);
    // guard the ceil against rounding in either direction
    while m > 0 && (k + 1) as f64 / (m - 1 + k + 1) as f64 <= epsilon {
        m -= 1;
    }
    while (k + 1) as f64 / (m + k + 1) as f64 > epsilon {
        m += 1;
    }
    Ok(m)
}

fn haar(d: usize, rng: &mut impl Rng) -> Vec<C64> {
    let z = DMatrix::<C64>::from_fn(d, d, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let ph = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    (0..d * d).map(|k| q[(k / d, k % d)]).collect()
}

/// `k` Haar-random gates, each on one uniform wire or one uniform adjacent pair
/// with equal probability.
pub fn random_circuit(n: usize, k: usize, seed: Seed) -> Result<CircuitIR> {
    let mut rng = seed.rng();
    let mut gates = Vec::with_capacity(k);
    for _ in 0..k {
        let g = if n == 1 || rng.random::<bool>() {
            Gate::new(vec![rng.random_range(1..=n)], haar(2, &mut rng))?
        } else {
            let a = rng.random_range(1..n);
            Gate::new(vec![a, a + 1], haar(4, &mut rng))?
        };
        gates.push(g);
    }
    CircuitIR::new(n, gates)
}

/// `rounds` full rounds of Haar-random gates in slot order: one on wire 1,
/// then one on each adjacent pair `(k, k+1)`.
pub fn random_rounds(n: usize, rounds: usize, seed: Seed) -> Result<CircuitIR> {
    if n < 2 {
        return Err(invalid("rounds need at least 2 wires"));
    }
    let mut rng = seed.rng();
    let mut gates = Vec::with_capacity(rounds * n);
    for _ in 0..rounds {
        gates.push(Gate::new(vec![1], haar(2, &mut rng))?);
        for k in 1..n {
            gates.push(Gate::new(vec![k, k + 1], haar(4, &mut rng))?);
        }
    }
    Ok(CircuitIR {
        n,
        gates,
        round_size: Some(n),
    })
}

/// One Haar-random single-qubit gate on each wire: a product output state.
pub fn random_product(n: usize, seed: Seed) -> Result<CircuitIR> {
    let mut rng = seed.rng();
    let gates = (1..=n)
        .map(|w| Gate::new(vec![w], haar(2, &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    CircuitIR::new(n, gates)
}

/// `H` on wire 1 followed by a CNOT ladder: Bell pair for `n = 2`, GHZ state beyond.
pub fn ghz_circuit(n: usize) -> Result<CircuitIR> {
    let mut gates = vec![Gate::named("H", vec![1])?];
    for w in 1..n {
        gates.push(Gate::named("CNOT", vec![w, w + 1])?);
    }
    CircuitIR::new(n, gates)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockEncoding {
    Binary,
    Unary,
}

impl fmt::Display for ClockEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClockEncoding::Binary => "binary",
            ClockEncoding::Unary => "unary",
        })
    }
}

impl FromStr for ClockEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(ClockEncoding::Binary),
            "unary" => Ok(ClockEncoding::Unary),
            _ => Err(invalid(format!("unknown clock encoding {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn empty_circuit_has_no_rounds() {
        let ir = normalize_rounds(&CircuitIR::new(3, vec![]).unwrap()).unwrap();
        assert_eq!(ir.rounds(), Some(0));
    }

    #[test]
    fn adjacent_cnot_fills_one_round() {
        let ir = CircuitIR::new(3, vec![Gate::named("CNOT", vec![1, 2]).unwrap()]).unwrap();
        let r = normalize_rounds(&ir).unwrap();
        assert_eq!(r.rounds(), Some(1));
        assert!(r.slot(0, 0).unwrap().is_identity());
        assert_eq!(r.slot(0, 1).unwrap(), &ir.gates()[0]);
        assert!(r.slot(0, 2).unwrap().is_identity());
    }

    #[test]
    fn routed_gates_preserve_unitary() {
        let cases = vec![
            vec![Gate::named("CNOT", vec![1, 3]).unwrap()],
            vec![
                Gate::named("CNOT", vec![3, 1]).unwrap(),
                Gate::named("H", vec![2]).unwrap(),
            ],
            vec![
                Gate::named("CZ", vec![2, 1]).unwrap(),
                Gate::named("T", vec![3]).unwrap(),
                Gate::named("X", vec![1]).unwrap(),
            ],
        ];
        for gates in cases {
            let ir = CircuitIR::new(3, gates).unwrap();
            let r = normalize_rounds(&ir).unwrap();
            assert!(max_diff(&ir.unitary().unwrap(), &r.unitary().unwrap()) < 1e-10);
            assert!(r.is_round_shaped());
        }
        let ir = random_circuit(4, 12, Seed::from_u64(7)).unwrap();
        let far = CircuitIR::new(
            4,
            vec![Gate::new(vec![4, 1], haar(4, &mut Seed::from_u64(1).rng())).unwrap()],
        )
        .unwrap();
        for c in [ir, far] {
            let r = normalize_rounds(&c).unwrap();
            assert!(max_diff(&c.unitary().unwrap(), &r.unitary().unwrap()) < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_gates() {
        assert_eq!(
            Gate::new(vec![1, 2, 3], vec![c(0.0); 64]),
            Err(Error::UnsupportedArity(3))
        );
        assert!(matches!(
            Gate::new(vec![1], vec![c(1.0), c(1.0), c(0.0), c(1.0)]),
            Err(Error::NonPhysical(_))
        ));
        assert!(CircuitIR::new(2, vec![Gate::identity(3)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ir = normalize_rounds(&random_circuit(3, 5, Seed::from_u64(3)).unwrap()).unwrap();
        let back = CircuitIR::from_json(&ir.to_json()).unwrap();
        assert_eq!(back, ir);
        let named = r#"{"version":1,"n":2,"gates":[{"wires":[1],"gate":"h"},{"wires":[1,2],"gate":"cnot"}]}"#;
        let bell = CircuitIR::from_json(named).unwrap().output_state().unwrap();
        assert!(
            (bell[0].re - FRAC_1_SQRT_2).abs() < 1e-15
                && (bell[3].re - FRAC_1_SQRT_2).abs() < 1e-15
        );
    }

    #[test]
    fn padding_rule() {
        assert_eq!(default_padding(6, 0.01).unwrap(), 693);
        assert_eq!(default_padding(0, 1.0).unwrap(), 0);
        for (k, eps) in [(3usize, 0.05), (10, 0.2), (4, 0.025)] {
            let m = default_padding(k, eps).unwrap();
            assert!((k + 1) as f64 / (m + k + 1) as f64 <= eps);
            assert!(m == 0 || (k + 1) as f64 / (m + k) as f64 > eps);
        }
    }

    #[test]
    fn haar_gates_are_unitary() {
        let mut rng = Seed::from_u64(11).rng();
        for d in [2, 4] {
            Gate::new(if d == 2 { vec![1] } else { vec![1, 2] }, haar(d, &mut rng)).unwrap();
        }
    }
}
