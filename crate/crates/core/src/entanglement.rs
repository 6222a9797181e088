//! Cuts, T-matrices, exact entropies and the rank / Frobenius bounds, mixed
//! state measures, continuity bounds and the 2D snake layout.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{budget, invalid, Error, Result};
use crate::rank::rank_rational;
use crate::scalar::{binary_entropy, shannon_bits, Real, Scalar};
use crate::state::StateVector;

/// Largest qubit count accepted by T-matrix construction.
pub const MAX_TMATRIX_QUBITS: usize = 20;

pub type C64 = Complex<f64>;

/// A set of qubit positions `X ⊆ [1..n]`, nonempty and proper.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cut {
    n: usize,
    /// Ascending, 1-based.
    subset: Vec<usize>,
}

impl Cut {
    pub fn new(n: usize, subset: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = subset.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&i| i == 0 || i > n) {
            return Err(invalid(format!("qubit {bad} outside 1..={n}")));
        }
        if set.is_empty() || set.len() == n {
            return Err(invalid(format!(
                "cut must be a nonempty proper subset of {n} qubits"
            )));
        }
        Ok(Cut {
            n,
            subset: set.into_iter().collect(),
        })
    }

    /// The prefix `{1, …, c}`.
    pub fn prefix(n: usize, c: usize) -> Result<Self> {
        Self::new(n, 1..=c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn len(&self) -> usize {
        self.subset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subset.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.subset.binary_search(&q).is_ok()
    }

    pub fn complement(&self) -> Cut {
        Cut {
            n: self.n,
            subset: (1..=self.n).filter(|q| !self.contains(*q)).collect(),
        }
    }

    /// Maximal runs of consecutive positions.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &q in &self.subset {
            match out.last_mut() {
                Some((_, hi)) if *hi + 1 == q => *hi = q,
                _ => out.push((q, q)),
            }
        }
        out
    }

    /// `z = i ∥_X j`: the bits of `i` fill the positions of `X` in order and
    /// the bits of `j` fill the rest, each most significant first.
    pub fn interleave(&self, i: u64, j: u64) -> u64 {
        let (a, b) = (self.len(), self.n - self.len());
        let (mut ia, mut ib) = (0, 0);
        let mut z = 0u64;
        for q in 1..=self.n {
            let bit = if self.contains(q) {
                ia += 1;
                (i >> (a - ia)) & 1
            } else {
                ib += 1;
                (j >> (b - ib)) & 1
            };
            z = (z << 1) | bit;
        }
        z
    }

    /// Table of `i ∥_X j` indexed by `i · 2^{n-|X|} + j`.
    fn interleave_table(&self) -> Vec<u64> {
        let (a, b) = (self.len(), self.n - self.len());
        if self.subset.iter().copied().eq(1..=a) {
            return (0..1u64 << self.n).collect();
        }
        let mut t = Vec::with_capacity(1 << self.n);
        for i in 0..1u64 << a {
            for j in 0..1u64 << b {
                t.push(self.interleave(i, j));
            }
        }
        t
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .segments()
            .into_iter()
            .map(|(lo, hi)| {
                if lo == hi {
                    lo.to_string()
                } else {
                    format!("{lo}-{hi}")
                }
            })
            .collect();
        write!(f, "{}/{}", parts.join(","), self.n)
    }
}

impl FromStr for Cut {
    type Err = Error;
    /// Parses the [`Display`](fmt::Display) form, e.g. `1-3,7/8`.
    fn from_str(s: &str) -> Result<Self> {
        let (body, n) = s
            .split_once('/')
            .ok_or_else(|| Error::Decode(format!("cut {s:?} lacks '/n'")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Decode(format!("{t:?}: {e}")))
        };
        let n = num(n)?;
        let mut set = Vec::new();
        for part in body.split(',') {
            match part.split_once('-') {
                Some((lo, hi)) => set.extend(num(lo)?..=num(hi)?),
                None => set.push(num(part)?),
            }
        }
        Cut::new(n, set)
    }
}

/// ±1 matrix stored as sign bits, one bit-packed row per `u64` chunk (bit set = −1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
}

impl TMatrix {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut negative: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let words = cols.div_ceil(64);
        let mut bits = vec![0u64; rows * words];
        for i in 0..rows {
            for j in 0..cols {
                if negative(i, j) {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        TMatrix {
            rows,
            cols,
            words,
            bits,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        if (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    fn row_bits(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn transpose(&self) -> TMatrix {
        TMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i) < 0)
    }

    /// Distinct rows with their multiplicities, in first-seen order.
    fn row_classes(&self) -> Vec<(&[u64], u128)> {
        let mut index: HashMap<&[u64], usize> = HashMap::new();
        let mut classes: Vec<(&[u64], u128)> = Vec::new();
        for i in 0..self.rows {
            let r = self.row_bits(i);
            match index.get(r) {
                Some(&k) => classes[k].1 += 1,
                None => {
                    index.insert(r, classes.len());
                    classes.push((r, 1));
                }
            }
        }
        classes
    }
}

/// `T_ij = (-1)^{s(i ∥_X j)}` for a phase table over `cut.n()` bits.
pub fn t_matrix(phase: &[bool], cut: &Cut) -> Result<TMatrix> {
    budget(
        "T-matrix (qubits)",
        cut.n as u128,
        MAX_TMATRIX_QUBITS as u128,
    )?;
    if phase.len() != 1usize << cut.n {
        return Err(invalid(format!(
            "phase table of length {} for {} qubits",
            phase.len(),
            cut.n
        )));
    }
    let (a, b) = (cut.len(), cut.n - cut.len());
    let z = cut.interleave_table();
    Ok(TMatrix::from_fn(1 << a, 1 << b, |i, j| {
        phase[z[(i << b) | j] as usize]
    }))
}

pub fn distinct_row_count(t: &TMatrix) -> usize {
    t.row_classes().len()
}

/// `‖T Tᵀ‖_F²`, exact. Computed on whichever side has fewer distinct vectors
/// (`‖T Tᵀ‖_F = ‖Tᵀ T‖_F`).
pub fn frobenius_sq(t: &TMatrix) -> u128 {
    let tt;
    let m = if distinct_row_count(t) <= distinct_row_count(&t.transpose()) {
        t
    } else {
        tt = t.transpose();
        &tt
    };
    let classes = m.row_classes();
    let cols = m.cols as i128;
    let mut total = 0u128;
    for (a, &(ra, ma)) in classes.iter().enumerate() {
        for (b, &(rb, mb)) in classes.iter().enumerate().skip(a) {
            let diff: u32 = ra.iter().zip(rb).map(|(x, y)| (x ^ y).count_ones()).sum();
            let g = cols - 2 * diff as i128;
            let term = (g * g) as u128 * ma * mb;
            total += if a == b { term } else { 2 * term };
        }
    }
    total
}

/// Rank over Q.
pub fn rank(t: &TMatrix) -> usize {
    let classes = t.row_classes();
    let rows = classes.len();
    let mut dense = Vec::with_capacity(rows * t.cols);
    for (r, _) in &classes {
        for j in 0..t.cols {
            dense.push(if (r[j / 64] >> (j % 64)) & 1 == 1 {
                -1i64
            } else {
                1
            });
        }
    }
    rank_rational(&dense, rows, t.cols)
}

/// `(−log₂(‖T Tᵀ‖_F / 2^n), log₂ rank T)`.
pub fn entropy_bounds(t: &TMatrix, n: usize) -> (f64, f64) {
    let f = frobenius_sq(t) as f64;
    let lower = n as f64 - 0.5 * f.log2();
    let upper = (rank(t) as f64).log2();
    (lower, upper)
}

pub(crate) fn entropy_from_singular_values(sv: impl IntoIterator<Item = f64>) -> f64 {
    shannon_bits(sv.into_iter().map(|s| s * s))
}

/// Schmidt coefficients of a pure state across `cut`, descending.
pub fn schmidt_values<T: Scalar>(state: &StateVector<T>, cut: &Cut) -> Result<Vec<f64>> {
    if state.n() != cut.n {
        return Err(invalid(format!(
            "{}-qubit cut on a {}-qubit state",
            cut.n,
            state.n()
        )));
    }
    let (a, b) = (cut.len(), cut.n - cut.len());
    let z = cut.interleave_table();
    let amps = state.amplitudes();
    let (rows, cols) = (1usize << a, 1usize << b);
    let mut sv: Vec<f64> = if amps.iter().all(|x| x.im() == T::Real::zero()) {
        let m = DMatrix::from_fn(rows, cols, |i, j| {
            amps[z[(i << b) | j] as usize].re().as_f64()
        });
        SVD::new(m, false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    } else {
        let m = DMatrix::from_fn(rows, cols, |i, j| {
            let v = amps[z[(i << b) | j] as usize];
            C64::new(v.re().as_f64(), v.im().as_f64())
        });
        SVD::new(m, false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    };
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// von Neumann entropy (bits) of the reduced state on `cut`.
pub fn entropy_exact<T: Scalar>(state: &StateVector<T>, cut: &Cut) -> Result<f64> {
    Ok(entropy_from_singular_values(schmidt_values(state, cut)?))
}

/// Reduced density matrix on the qubits of `keep`, ordered by ascending position.
pub fn reduced_density<T: Scalar>(state: &StateVector<T>, keep: &Cut) -> Result<DensityMatrix> {
    if state.n() != keep.n {
        return Err(invalid(format!(
            "{}-qubit cut on a {}-qubit state",
            keep.n,
            state.n()
        )));
    }
    let (a, b) = (keep.len(), keep.n - keep.len());
    let z = keep.interleave_table();
    let amps = state.amplitudes();
    let m = DMatrix::from_fn(1 << a, 1 << b, |i, j| {
        let v = amps[z[(i << b) | j] as usize];
        C64::new(v.re().as_f64(), v.im().as_f64())
    });
    DensityMatrix::from_matrix_unchecked(&m * m.adjoint())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<C64>,
}

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(data: DMatrix<C64>) -> Result<Self> {
        let d = Self::from_matrix_unchecked(data)?;
        let tr = d.data.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NonPhysical(format!("trace {tr} is not 1")));
        }
        if let Some(&lo) = d.eigenvalues().iter().find(|&&e| e < -PSD_TOL) {
            return Err(Error::NonPhysical(format!("negative eigenvalue {lo:e}")));
        }
        Ok(d)
    }

    /// Checks shape and Hermiticity only (for partial results that are
    /// physical up to roundoff by construction).
    fn from_matrix_unchecked(data: DMatrix<C64>) -> Result<Self> {
        if !data.is_square() || data.nrows() == 0 {
            return Err(Error::NonPhysical(format!(
                "{}x{} is not a square matrix",
                data.nrows(),
                data.ncols()
            )));
        }
        let dev = (&data - data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > HERMITIAN_TOL.max(1e-14 * data.nrows() as f64) {
            return Err(Error::NonPhysical(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        Ok(DensityMatrix { data })
    }

    pub fn from_pure<T: Scalar>(state: &StateVector<T>) -> Result<Self> {
        let v = nalgebra::DVector::from_iterator(
            state.amplitudes().len(),
            state
                .amplitudes()
                .iter()
                .map(|a| C64::new(a.re().as_f64(), a.im().as_f64())),
        );
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(
            d,
            d,
            C64::new(1.0 / d as f64, 0.0),
        ))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn entropy(&self) -> f64 {
        shannon_bits(self.eigenvalues())
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            data: self.data.kronecker(&other.data),
        }
    }

    fn check_dims(&self, da: usize, db: usize) -> Result<()> {
        if da == 0 || db == 0 || da * db != self.dim() {
            return Err(invalid(format!(
                "dims {da}x{db} do not factor dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `Tr_B ρ` for `ρ` on `A ⊗ B` with `A` the most significant factor.
    pub fn trace_out_b(&self, da: usize, db: usize) -> Result<DensityMatrix> {
        self.check_dims(da, db)?;
        let m = DMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| self.data[(i * db + j, k * db + j)]).sum()
        });
        Ok(DensityMatrix { data: m })
    }

    /// `Tr_A ρ`.
    pub fn trace_out_a(&self, da: usize, db: usize) -> Result<DensityMatrix> {
        self.check_dims(da, db)?;
        let m = DMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| self.data[(i * db + j, i * db + l)]).sum()
        });
        Ok(DensityMatrix { data: m })
    }

    /// Reorders the qubits of an `n`-qubit state so the qubits of `first` come
    /// first (ascending), followed by the rest.
    pub fn reorder(&self, first: &Cut) -> Result<DensityMatrix> {
        if self.dim() != 1 << first.n {
            return Err(invalid(format!(
                "{}-qubit cut on dimension {}",
                first.n,
                self.dim()
            )));
        }
        let z = first.interleave_table();
        let m = DMatrix::from_fn(self.dim(), self.dim(), |i, k| {
            self.data[(z[i] as usize, z[k] as usize)]
        });
        Ok(DensityMatrix { data: m })
    }

    /// Reduced state on the qubits of `keep`.
    pub fn reduce_to(&self, keep: &Cut) -> Result<DensityMatrix> {
        let a = keep.len();
        self.reorder(keep)?.trace_out_b(1 << a, 1 << (keep.n - a))
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(invalid("trace distance of different dimensions"));
        }
        let diff = &self.data - &other.data;
        Ok(0.5
            * SymmetricEigen::new(diff)
                .eigenvalues
                .iter()
                .map(|e| e.abs())
                .sum::<f64>())
    }
}

/// `I(A⟩B) = S(ρ_B) − S(ρ_AB)`.
pub fn coherent_information(rho_ab: &DensityMatrix, da: usize, db: usize) -> Result<f64> {
    let rho_b = rho_ab.trace_out_a(da, db)?;
    Ok(rho_b.entropy() - rho_ab.entropy())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityKind {
    /// `ε·log d + h(ε)`.
    Fannes,
    /// `2ε·log|A| + (1+ε)·h(ε/(1+ε))` for conditional entropy.
    AfwConditional,
    /// Entanglement of formation with `δ = √(ε(2−ε))`: `δ·log d + (1+δ)·h(δ/(1+δ))`.
    Eof,
}

impl FromStr for ContinuityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fannes" => Ok(ContinuityKind::Fannes),
            "afw_conditional" | "afw" => Ok(ContinuityKind::AfwConditional),
            "eof" => Ok(ContinuityKind::Eof),
            other => Err(invalid(format!("unknown continuity bound {other:?}"))),
        }
    }
}

/// Continuity bound in bits; `log_dim` is `log₂` of the relevant dimension
/// (the qubit count of the system, or of `A` for the conditional bound).
pub fn continuity_bounds<R: Real>(epsilon: R, log_dim: R, kind: ContinuityKind) -> Result<R> {
    let (zero, one, two) = (R::zero(), R::one(), R::lit(2.0));
    if !(epsilon >= zero && epsilon <= one) {
        return Err(invalid(format!("epsilon={epsilon} outside [0, 1]")));
    }
    if !(log_dim >= zero) {
        return Err(invalid(format!("log dimension {log_dim} is negative")));
    }
    let mixed = |x: R| (one + x) * binary_entropy(x / (one + x));
    Ok(match kind {
        ContinuityKind::Fannes => epsilon * log_dim + binary_entropy(epsilon),
        ContinuityKind::AfwConditional => two * epsilon * log_dim + mixed(epsilon),
        ContinuityKind::Eof => {
            let delta = (epsilon * (two - epsilon)).sqrt();
            delta * log_dim + mixed(delta)
        }
    })
}

/// 1D position (1-based) of grid cell `(row, col)` (0-based) under the
/// boustrophedon unfolding: even rows run left to right, odd rows right to left.
pub fn snake_index(side: usize, row: usize, col: usize) -> usize {
    let c = if row.is_multiple_of(2) {
        col
    } else {
        side - 1 - col
    };
    row * side + c + 1
}

/// Edges between `region` and its complement inside a `side × side` grid.
pub fn boundary_size(side: usize, region: &BTreeSet<(usize, usize)>) -> usize {
    let mut count = 0;
    for &(r, c) in region {
        let nbrs = [
            (r.wrapping_sub(1), c),
            (r + 1, c),
            (r, c.wrapping_sub(1)),
            (r, c + 1),
        ];
        count += nbrs
            .iter()
            .filter(|&&(a, b)| a < side && b < side && !region.contains(&(a, b)))
            .count();
    }
    count
}

fn connected(region: &BTreeSet<(usize, usize)>) -> bool {
    let Some(&start) = region.iter().next() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some((r, c)) = stack.pop() {
        for nb in [
            (r.wrapping_sub(1), c),
            (r + 1, c),
            (r, c.wrapping_sub(1)),
            (r, c + 1),
        ] {
            if region.contains(&nb) && seen.insert(nb) {
                stack.push(nb);
            }
        }
    }
    seen.len() == region.len()
}

/// Maps a 4-connected region of the `side × side` grid (cells `(row, col)`,
/// 0-based) to its 1D cut and the number of maximal 1D segments.
pub fn snake_cut(side: usize, region: &BTreeSet<(usize, usize)>) -> Result<(Cut, usize)> {
    if let Some(&(r, c)) = region.iter().find(|&&(r, c)| r >= side || c >= side) {
        return Err(invalid(format!(
            "cell ({r}, {c}) outside a {side}x{side} grid"
        )));
    }
    if !connected(region) {
        return Err(invalid("region is empty or not 4-connected"));
    }
    let cut = Cut::new(
        side * side,
        region.iter().map(|&(r, c)| snake_index(side, r, c)),
    )?;
    let segs = cut.segments().len();
    Ok((cut, segs))
}

/// Every 4-connected proper region of the grid with `boundary_size ≤ max_boundary`.
pub fn connected_regions(
    side: usize,
    max_boundary: usize,
) -> Result<Vec<BTreeSet<(usize, usize)>>> {
    budget("region enumeration (cells)", (side * side) as u128, 20)?;
    let cells = side * side;
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << cells) - 1 {
        let region: BTreeSet<(usize, usize)> = (0..cells)
            .filter(|k| (mask >> k) & 1 == 1)
            .map(|k| (k / side, k % side))
            .collect();
        if connected(&region) && boundary_size(side, &region) <= max_boundary {
            out.push(region);
        }
    }
    Ok(out)
}

/// One row of an entropy profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub n: usize,
    pub cut_spec: String,
    pub exact_s: f64,
    pub lower: f64,
    pub upper: f64,
    pub distinct_rows: usize,
    /// Decimal string; the value can exceed 2^64.
    pub frobenius_sq: String,
}

impl EntropyReport {
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        self.lower <= self.exact_s + tol && self.exact_s <= self.upper + tol
    }
}

/// Exact entropy, both T-matrix bounds and the row statistics for one cut of a phase state.
pub fn entropy_report(phase: &[bool], cut: &Cut) -> Result<EntropyReport> {
    let t = t_matrix(phase, cut)?;
    let state = crate::state::PhaseState::from_signs(cut.n, phase.iter().copied())?;
    let exact_s = entropy_exact(&state, cut)?;
    let (lower, upper) = entropy_bounds(&t, cut.n);
    Ok(EntropyReport {
        n: cut.n,
        cut_spec: cut.to_string(),
        exact_s,
        lower,
        upper,
        distinct_rows: distinct_row_count(&t),
        frobenius_sq: frobenius_sq(&t).to_string(),
    })
}
