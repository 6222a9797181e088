//! Clock Hamiltonians for padded circuits and their history states.
//!
//! The register is `data ⊗ clock` with the data register most significant, so
//! basis index `x · D + c` pairs data value `x` with clock basis state `c` of a
//! `D`-dimensional clock. Three clock spaces are supported:
//!
//! * binary: `⌈log₂(T+1)⌉` qubits holding `t` in binary, values above `T`
//!   penalized;
//! * unary: `T` qubits holding `1^t 0^{T−t}`, adjacent `|01⟩` penalized;
//! * unary-legal: the `T + 1` legal unary states only. Every term of the unary
//!   Hamiltonian maps legal clock states to legal ones and the illegal block
//!   costs at least 1, so this restriction has the same ground state and the
//!   same low spectrum whenever the legal gap is below 1.
//!
//! `H = H_in + H_clock + Σ_t H_prop(t)` with
//! `H_prop(t) = ½(|t⟩⟨t| + |t−1⟩⟨t−1|) ⊗ I − ½(|t⟩⟨t−1| ⊗ U_t + h.c.)` and
//! `H_in = Σ_i |1⟩⟨1|_i ⊗ |0⟩⟨0|_clock`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::circuit::{ClockEncoding, Gate, PaddedCircuit};
use crate::entanglement::{
    coherent_information, continuity_bounds, ContinuityKind, Cut, DensityMatrix,
};
use crate::error::{budget, invalid, Result};
use crate::sparse::TripletBuilder;
use crate::state::{ComplexState, MAX_DENSE_QUBITS};
use crate::{SparseOperator, C64};

/// Largest total dimension assembled or simulated.
pub const MAX_DIM: usize = 1 << MAX_DENSE_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockSpace {
    Binary { total: usize },
    Unary { total: usize },
    UnaryLegal { total: usize },
}

impl ClockSpace {
    /// Full qubit register for `encoding`.
    pub fn qubits(encoding: ClockEncoding, total: usize) -> Self {
        match encoding {
            ClockEncoding::Binary => ClockSpace::Binary { total },
            ClockEncoding::Unary => ClockSpace::Unary { total },
        }
    }

    /// Smallest faithful space: the unary clock is restricted to legal states.
    pub fn compact(encoding: ClockEncoding, total: usize) -> Self {
        match encoding {
            ClockEncoding::Binary => ClockSpace::Binary { total },
            ClockEncoding::Unary => ClockSpace::UnaryLegal { total },
        }
    }

    pub fn total(&self) -> usize {
        match *self {
            ClockSpace::Binary { total }
            | ClockSpace::Unary { total }
            | ClockSpace::UnaryLegal { total } => total,
        }
    }

    pub fn encoding(&self) -> ClockEncoding {
        match self {
            ClockSpace::Binary { .. } => ClockEncoding::Binary,
            _ => ClockEncoding::Unary,
        }
    }

    /// Clock qubits, when the space is a qubit register.
    pub fn qubit_count(&self) -> Option<usize> {
        match *self {
            ClockSpace::Binary { total } => Some(binary_width(total)),
            ClockSpace::Unary { total } => Some(total),
            ClockSpace::UnaryLegal { .. } => None,
        }
    }

    /// Dimension of the clock space (saturating for oversized registers).
    pub fn dim(&self) -> usize {
        match *self {
            ClockSpace::UnaryLegal { total } => total + 1,
            _ => {
                let q = self.qubit_count().expect("qubit space");
                if q >= usize::BITS as usize {
                    usize::MAX
                } else {
                    1 << q
                }
            }
        }
    }

    /// Basis index of `clock(t)`.
    pub fn index(&self, t: usize) -> usize {
        debug_assert!(t <= self.total());
        match *self {
            ClockSpace::Binary { .. } | ClockSpace::UnaryLegal { .. } => t,
            ClockSpace::Unary { total } => ((1usize << t) - 1) << (total - t),
        }
    }

    fn checked_dim(&self, n: usize) -> Result<usize> {
        let d = self.dim();
        let full = (d as u128) << n;
        budget("history register dimension", full, MAX_DIM as u128)?;
        Ok(full as usize)
    }
}

/// `⌈log₂(T+1)⌉`.
pub fn binary_width(total: usize) -> usize {
    (usize::BITS - total.leading_zeros()) as usize
}

/// Nonzero entries of column `x` of `U` acting on `n` data qubits.
fn gate_column(g: &Gate, n: usize, x: usize) -> Vec<(usize, C64)> {
    let shifts: Vec<usize> = g.wires().iter().map(|&w| n - w).collect();
    let local = shifts.iter().fold(0, |acc, &s| (acc << 1) | ((x >> s) & 1));
    let cleared = shifts.iter().fold(x, |acc, &s| acc & !(1 << s));
    let d = 1 << shifts.len();
    (0..d)
        .filter_map(|row| {
            let v = g.entry(row, local);
            (v != C64::new(0.0, 0.0)).then(|| {
                let y = shifts.iter().enumerate().fold(cleared, |acc, (k, &s)| {
                    acc | (((row >> (shifts.len() - 1 - k)) & 1) << s)
                });
                (y, v)
            })
        })
        .collect()
}

/// `(1/√(T+1)) Σ_t U_t ⋯ U_1 |0^n⟩ ⊗ |clock(t)⟩` laid out in `space`.
pub fn history_vector(padded: &PaddedCircuit, space: ClockSpace) -> Result<Vec<C64>> {
    if space.total() != padded.total() {
        return Err(invalid(format!(
            "clock for T={} used with T={}",
            space.total(),
            padded.total()
        )));
    }
    let n = padded.n();
    let dim = space.checked_dim(n)?;
    let d = space.dim();
    let states = padded.unpadded_states()?;
    let w = 1.0 / ((padded.total() + 1) as f64).sqrt();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for t in 0..=padded.total() {
        let psi = &states[t.min(padded.k())];
        let c = space.index(t);
        for (x, a) in psi.iter().enumerate() {
            out[x * d + c] += a * w;
        }
    }
    Ok(out)
}

/// History state on the full qubit register of `encoding`.
pub fn history_state(padded: &PaddedCircuit, encoding: ClockEncoding) -> Result<ComplexState> {
    let space = ClockSpace::qubits(encoding, padded.total());
    let v = history_vector(padded, space)?;
    ComplexState::new(padded.n() + space.qubit_count().expect("qubit space"), v)
}

/// `ψ_f = (U_K ⋯ U_1|0^n⟩) ⊗ (1/√(T+1)) Σ_t |clock(t)⟩`.
pub fn target_vector(padded: &PaddedCircuit, space: ClockSpace) -> Result<Vec<C64>> {
    let n = padded.n();
    let dim = space.checked_dim(n)?;
    let d = space.dim();
    let out_state = padded.base().output_state()?;
    let w = 1.0 / ((padded.total() + 1) as f64).sqrt();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for t in 0..=padded.total() {
        let c = space.index(t);
        for (x, a) in out_state.iter().enumerate() {
            out[x * d + c] += a * w;
        }
    }
    Ok(out)
}

/// Clock Hamiltonian on the full qubit register of `encoding`.
pub fn build_clock_ham(padded: &PaddedCircuit, encoding: ClockEncoding) -> Result<SparseOperator> {
    build_clock_ham_in(padded, ClockSpace::qubits(encoding, padded.total()))
}

pub fn build_clock_ham_in(padded: &PaddedCircuit, space: ClockSpace) -> Result<SparseOperator> {
    if space.total() != padded.total() {
        return Err(invalid(format!(
            "clock for T={} used with T={}",
            space.total(),
            padded.total()
        )));
    }
    let n = padded.n();
    let dim = space.checked_dim(n)?;
    let h = match space {
        ClockSpace::Binary { .. } | ClockSpace::UnaryLegal { .. } => {
            indexed_clock(padded, space, dim)
        }
        ClockSpace::Unary { .. } => unary_qubit_clock(padded, dim),
    };
    h.build()
}

/// Clock states are `0..=T` directly; indices above `T` are illegal.
fn indexed_clock(padded: &PaddedCircuit, space: ClockSpace, dim: usize) -> TripletBuilder<C64> {
    let n = padded.n();
    let d = space.dim();
    let total = padded.total();
    let one = C64::new(1.0, 0.0);
    let half = C64::new(0.5, 0.0);
    let mut b = TripletBuilder::new(dim);
    for x in 0..1usize << n {
        let ones = x.count_ones() as f64;
        if ones > 0.0 {
            b.add(x * d, x * d, C64::new(ones, 0.0));
        }
        for v in total + 1..d {
            b.add(x * d + v, x * d + v, one);
        }
    }
    for t in 1..=total {
        let g = padded.gate(t);
        for x in 0..1usize << n {
            b.add(x * d + t, x * d + t, half);
            b.add(x * d + t - 1, x * d + t - 1, half);
            for (y, u) in gate_column(g, n, x) {
                b.add_hermitian_pair(y * d + t, x * d + t - 1, -half * u);
            }
        }
    }
    b
}

/// Unary clock on `T` qubits; clock qubit `j` is bit `T − j` of the clock value.
fn unary_qubit_clock(padded: &PaddedCircuit, dim: usize) -> TripletBuilder<C64> {
    let n = padded.n();
    let total = padded.total();
    let d = 1usize << total;
    let bit = |c: usize, j: usize| (c >> (total - j)) & 1;
    let half = C64::new(0.5, 0.0);
    let mut b = TripletBuilder::new(dim);
    for c in 0..d {
        let clock_zero = total == 0 || bit(c, 1) == 0;
        let illegal = (1..total)
            .filter(|&j| bit(c, j) == 0 && bit(c, j + 1) == 1)
            .count() as f64;
        for x in 0..1usize << n {
            let penalty = illegal
                + if clock_zero {
                    x.count_ones() as f64
                } else {
                    0.0
                };
            if penalty > 0.0 {
                b.add(x * d + c, x * d + c, C64::new(penalty, 0.0));
            }
        }
        for t in 1..=total {
            // local window t−1, t, t+1: |1?0⟩ with the ends dropped at the boundary
            let left_ok = t == 1 || bit(c, t - 1) == 1;
            let right_ok = t == total || bit(c, t + 1) == 0;
            if !(left_ok && right_ok) {
                continue;
            }
            let g = padded.gate(t);
            for x in 0..1usize << n {
                b.add(x * d + c, x * d + c, half);
            }
            if bit(c, t) == 0 {
                let c_up = c | (1 << (total - t));
                for x in 0..1usize << n {
                    for (y, u) in gate_column(g, n, x) {
                        b.add_hermitian_pair(y * d + c_up, x * d + c, -half * u);
                    }
                }
            }
        }
    }
    b
}

/// Closeness of the history state to `ψ_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Closeness {
    /// `⟨ψ_f|Ψ⟩`.
    pub overlap: C64,
    /// `½‖|ψ_f⟩⟨ψ_f| − |Ψ⟩⟨Ψ|‖₁ = √(1 − |⟨ψ_f|Ψ⟩|²)`.
    pub trace_distance: f64,
    /// `2√(δ(1−δ))` with `δ = (K+1)/(M+K+1)`, capped at 1.
    pub epsilon_bound: f64,
}

/// Exact trace distance between the padded history state and `ψ_f`, from
/// `⟨ψ_f|Ψ⟩ = (1/(T+1)) Σ_t ⟨ψ_out|ψ_t⟩` (clock states are orthonormal).
pub fn padded_closeness(padded: &PaddedCircuit) -> Result<Closeness> {
    let states = padded.unpadded_states()?;
    let out = states.last().expect("initial state");
    let k = padded.k();
    let total = padded.total();
    let partial: C64 = states[..k].iter().map(|s| inner(out, s)).sum();
    let overlap = (partial + C64::new((total - k + 1) as f64, 0.0)) / (total + 1) as f64;
    Ok(Closeness {
        overlap,
        trace_distance: pure_trace_distance(overlap.norm()),
        epsilon_bound: epsilon_bound(k, padded.m()),
    })
}

/// `2√(δ(1−δ))` with `δ = (K+1)/(M+K+1)`: the trace distance allowed by the
/// worst case `⟨ψ_f|Ψ⟩ ≥ 1 − 2δ`.
pub fn epsilon_bound(k: usize, m: usize) -> f64 {
    let delta = (k + 1) as f64 / (m + k + 1) as f64;
    if delta >= 0.5 {
        1.0
    } else {
        2.0 * (delta * (1.0 - delta)).sqrt()
    }
}

fn pure_trace_distance(overlap_abs: f64) -> f64 {
    (1.0 - overlap_abs.min(1.0).powi(2)).max(0.0).sqrt()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `½‖|a⟩⟨a| − |b⟩⟨b|‖₁` for normalized vectors.
pub fn vector_trace_distance(a: &[C64], b: &[C64]) -> f64 {
    pure_trace_distance(inner(a, b).norm())
}

/// `Tr_clock |v⟩⟨v|` for `v` on `n` data qubits times a clock of dimension
/// `v.len() / 2^n`.
pub fn data_density(vector: &[C64], n: usize) -> Result<DensityMatrix> {
    let dx = 1usize << n;
    if !vector.len().is_multiple_of(dx) || vector.is_empty() {
        return Err(invalid(format!(
            "vector length {} is not a multiple of 2^{n}",
            vector.len()
        )));
    }
    budget("data register (qubits)", n as u128, 12)?;
    let d = vector.len() / dx;
    let m = DMatrix::from_fn(dx, dx, |x, y| {
        (0..d)
            .map(|c| vector[x * d + c] * vector[y * d + c].conj())
            .sum::<C64>()
    });
    DensityMatrix::new(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataEntropyReport {
    pub cut: String,
    /// `S(ρ_A)` with the clock on the B side: entanglement of the pure state
    /// across `A | (data \ A) ⊗ clock`.
    pub entropy: f64,
    /// `I(A⟩B)` of the data register with the clock traced out.
    pub coherent_information: f64,
    /// The same quantities for the circuit output state.
    pub output_entropy: f64,
    /// `½‖ρ_data − |ψ_out⟩⟨ψ_out|‖₁`.
    pub data_trace_distance: f64,
    /// Fannes slack at `data_trace_distance` with `log d = |A|`.
    pub fannes_slack: f64,
    /// Conditional-entropy slack at `data_trace_distance` with `log d = |A|`.
    pub afw_slack: f64,
}

impl DataEntropyReport {
    /// `[I(A⟩B), S(ρ_A)]`, bracketing distillable entanglement and entanglement cost.
    pub fn interval(&self) -> (f64, f64) {
        (self.coherent_information, self.entropy)
    }

    pub fn fannes_holds(&self) -> bool {
        (self.entropy - self.output_entropy).abs() <= self.fannes_slack
    }

    pub fn afw_holds(&self) -> bool {
        self.coherent_information >= self.output_entropy - self.afw_slack
            && self.coherent_information <= self.output_entropy + self.afw_slack
    }
}

/// Entanglement diagnostics of a data cut for a clock-register vector
/// (for instance a ground state), compared with the circuit output state.
pub fn data_register_entropy(
    vector: &[C64],
    output: &[C64],
    n: usize,
    cut: &Cut,
) -> Result<DataEntropyReport> {
    if cut.n() != n {
        return Err(invalid(format!("{}-qubit cut on {n} data qubits", cut.n())));
    }
    let a = cut.len();
    let rho = data_density(vector, n)?;
    let out = data_density(output, n)?;
    let ordered = rho.reorder(cut)?;
    let (da, db) = (1 << a, 1 << (n - a));
    let ci = coherent_information(&ordered, da, db)?;
    let out_ordered = out.reorder(cut)?;
    let eps = rho.trace_distance(&out)?.min(1.0);
    Ok(DataEntropyReport {
        cut: cut.to_string(),
        entropy: ordered.trace_out_b(da, db)?.entropy(),
        coherent_information: ci,
        output_entropy: out_ordered.trace_out_b(da, db)?.entropy(),
        data_trace_distance: eps,
        fannes_slack: continuity_bounds(eps, a as f64, ContinuityKind::Fannes)?,
        afw_slack: continuity_bounds(eps, a as f64, ContinuityKind::AfwConditional)?,
    })
}
