//! Nine-state qudit grid with `n` rows and `T+1` columns: legal shapes, the
//! local rule set, the 2D propagation Hamiltonian, the structured history
//! state and its entanglement across horizontal cuts.
//!
//! Sites are numbered row-major from the top-left corner, rows `1..=n` and
//! columns `0..=T`. The qubit carried by row `i` is qubit `i` (MSB first).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::circuit::{normalize_rounds, CircuitIR, Gate};
use crate::entanglement::{entropy_exact, entropy_from_singular_values, Cut};
use crate::error::{budget, invalid, Error, Result};
use crate::lanczos::{ground_state_with, LanczosOptions, Strategy};
use crate::sparse::TripletBuilder;
use crate::{Seed, SparseOperator, StateVector, C64};

/// Largest grid (in sites) for full-space operators and dense export.
pub const MAX_DENSE_SITES: usize = 7;
/// Largest grid (in sites) for exhaustive phase-skeleton enumeration.
pub const MAX_ENUM_SITES: usize = 9;
/// Operator-norm tolerance for cutwise orthogonality.
pub const ORTHO_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Unborn,
    First,
    Second,
    Dead,
    Flag,
    Marker,
}

pub const PHASES: [Phase; 6] = [
    Phase::Unborn,
    Phase::First,
    Phase::Second,
    Phase::Dead,
    Phase::Flag,
    Phase::Marker,
];

impl Phase {
    pub fn carries_bit(self) -> bool {
        matches!(self, Phase::First | Phase::Second | Phase::Flag)
    }

    pub fn code(self) -> &'static str {
        match self {
            Phase::Unborn => "UN",
            Phase::First => "F",
            Phase::Second => "S",
            Phase::Dead => "DE",
            Phase::Flag => "G",
            Phase::Marker => "MK",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One qudit basis state. The discriminant is the frozen basis index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Symbol {
    Unborn = 0,
    First0 = 1,
    First1 = 2,
    Second0 = 3,
    Second1 = 4,
    Dead = 5,
    Flag0 = 6,
    Flag1 = 7,
    Marker = 8,
}

pub const SYMBOLS: [Symbol; 9] = [
    Symbol::Unborn,
    Symbol::First0,
    Symbol::First1,
    Symbol::Second0,
    Symbol::Second1,
    Symbol::Dead,
    Symbol::Flag0,
    Symbol::Flag1,
    Symbol::Marker,
];

impl Symbol {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Symbol> {
        SYMBOLS.get(i).copied()
    }

    pub fn phase(self) -> Phase {
        PHASE_OF[self as usize]
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            Symbol::First0 | Symbol::Second0 | Symbol::Flag0 => Some(0),
            Symbol::First1 | Symbol::Second1 | Symbol::Flag1 => Some(1),
            _ => None,
        }
    }

    /// The symbol of `phase` holding `bit`; the bit is ignored for bitless phases.
    pub fn with_bit(phase: Phase, bit: u8) -> Symbol {
        let b = bit & 1;
        match phase {
            Phase::Unborn => Symbol::Unborn,
            Phase::First => [Symbol::First0, Symbol::First1][b as usize],
            Phase::Second => [Symbol::Second0, Symbol::Second1][b as usize],
            Phase::Dead => Symbol::Dead,
            Phase::Flag => [Symbol::Flag0, Symbol::Flag1][b as usize],
            Phase::Marker => Symbol::Marker,
        }
    }

    pub fn code(self) -> &'static str {
        ["UN", "F0", "F1", "S0", "S1", "DE", "G0", "G1", "MK"][self as usize]
    }
}

const PHASE_OF: [Phase; 9] = [
    Phase::Unborn,
    Phase::First,
    Phase::First,
    Phase::Second,
    Phase::Second,
    Phase::Dead,
    Phase::Flag,
    Phase::Flag,
    Phase::Marker,
];

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SYMBOLS
            .iter()
            .copied()
            .find(|x| x.code() == s)
            .ok_or_else(|| Error::Decode(format!("unknown qudit symbol {s:?}")))
    }
}

fn check_geometry(n: usize, cols: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("grid needs at least 2 rows, got {n}")));
    }
    if cols < 1 {
        return Err(invalid("grid needs T ≥ 1"));
    }
    Ok(())
}

/// `L = (3n−1)T`.
pub fn shape_length(n: usize, cols: usize) -> usize {
    (3 * n - 1) * cols
}

/// A phase skeleton: one phase per site, bits left open.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    n: usize,
    cols: usize,
    cells: Vec<Phase>,
}

impl Shape {
    pub fn new(n: usize, cols: usize, cells: Vec<Phase>) -> Result<Self> {
        if n == 0 || cells.len() != n * (cols + 1) {
            return Err(invalid(format!(
                "{} cells for a {n}×{} grid",
                cells.len(),
                cols + 1
            )));
        }
        Ok(Shape { n, cols, cells })
    }

    fn filled(n: usize, cols: usize, p: Phase) -> Self {
        Shape {
            n,
            cols,
            cells: vec![p; n * (cols + 1)],
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    /// `T`, the index of the last column.
    pub fn last_col(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[Phase] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Phase {
        self.cells[site(self.cols, row, col)]
    }

    fn set(&mut self, row: usize, col: usize, p: Phase) {
        let s = site(self.cols, row, col);
        self.cells[s] = p;
    }

    /// Column of the bit-carrying site in each row, if every row has exactly one.
    pub fn active_columns(&self) -> Option<Vec<usize>> {
        (1..=self.n)
            .map(|row| {
                let mut hits = (0..=self.cols).filter(|&col| self.get(row, col).carries_bit());
                match (hits.next(), hits.next()) {
                    (Some(c), None) => Some(c),
                    _ => None,
                }
            })
            .collect()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 1..=self.n {
            let line: Vec<&str> = (0..=self.cols)
                .map(|col| self.get(row, col).code())
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn site(cols: usize, row: usize, col: usize) -> usize {
    (row - 1) * (cols + 1) + col
}

fn row_col(cols: usize, s: usize) -> (usize, usize) {
    (s / (cols + 1) + 1, s % (cols + 1))
}

/// A full basis configuration of the grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridConfig {
    n: usize,
    cols: usize,
    cells: Vec<Symbol>,
}

impl GridConfig {
    pub fn new(n: usize, cols: usize, cells: Vec<Symbol>) -> Result<Self> {
        if n == 0 || cells.len() != n * (cols + 1) {
            return Err(invalid(format!(
                "{} cells for a {n}×{} grid",
                cells.len(),
                cols + 1
            )));
        }
        Ok(GridConfig { n, cols, cells })
    }

    /// Fills the active sites of `shape` with the bits of `x` (row 1 is the MSB).
    pub fn from_shape(shape: &Shape, x: usize) -> Self {
        let cells = shape
            .cells
            .iter()
            .enumerate()
            .map(|(s, &p)| {
                let (row, _) = row_col(shape.cols, s);
                Symbol::with_bit(p, ((x >> (shape.n - row)) & 1) as u8)
            })
            .collect();
        GridConfig {
            n: shape.n,
            cols: shape.cols,
            cells,
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn last_col(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Symbol {
        self.cells[site(self.cols, row, col)]
    }

    pub fn shape(&self) -> Shape {
        Shape {
            n: self.n,
            cols: self.cols,
            cells: self.cells.iter().map(|s| s.phase()).collect(),
        }
    }

    /// Index in the full `9^{n(T+1)}` basis, first site most significant.
    pub fn dense_index(&self) -> usize {
        self.cells.iter().fold(0, |acc, s| acc * 9 + s.index())
    }

    pub fn from_dense_index(n: usize, cols: usize, mut index: usize) -> Result<Self> {
        let sites = n * (cols + 1);
        let mut cells = vec![Symbol::Unborn; sites];
        for s in (0..sites).rev() {
            cells[s] = SYMBOLS[index % 9];
            index /= 9;
        }
        if index != 0 {
            return Err(invalid("dense index outside the grid basis"));
        }
        GridConfig::new(n, cols, cells)
    }
}

impl fmt::Display for GridConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 1..=self.n {
            let line: Vec<&str> = (0..=self.cols)
                .map(|col| self.get(row, col).code())
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for GridConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<Vec<Symbol>> = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(str::parse)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let width = rows.first().map_or(0, Vec::len);
        if width < 2 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Decode(
                "grid rows must share a width of at least 2".into(),
            ));
        }
        GridConfig::new(rows.len(), width - 1, rows.concat())
    }
}

/// The legal shape with index `t` on an `n × (T+1)` grid.
pub fn legal_shape(t: usize, n: usize, cols: usize) -> Result<Shape> {
    use std::cmp::Ordering::*;
    use Phase::*;
    check_geometry(n, cols)?;
    let period = 3 * n - 1;
    let l = period * cols;
    if t > l {
        return Err(Error::OutOfRange { index: t, max: l });
    }
    let (r, k) = if t == l {
        (cols, 0)
    } else {
        (t / period, t % period)
    };
    let mut s = Shape::filled(n, cols, Unborn);
    for row in 1..=n {
        for col in 0..r {
            s.set(row, col, Dead);
        }
    }
    if k == 0 {
        for row in 1..=n {
            s.set(row, r, First);
        }
    } else if k <= n {
        for row in 1..=n {
            s.set(
                row,
                r,
                match row.cmp(&k) {
                    Less => Second,
                    Equal => Flag,
                    Greater => First,
                },
            );
        }
    } else {
        let kp = k - n;
        let j = kp.div_ceil(2);
        for row in 1..=n {
            s.set(row, r, if row <= n - j { Second } else { Dead });
        }
        if kp % 2 == 1 {
            s.set(n - j + 1, r + 1, Flag);
        } else {
            s.set(n - j, r + 1, Marker);
            s.set(n - j + 1, r + 1, First);
        }
        for row in n - j + 2..=n {
            s.set(row, r + 1, First);
        }
    }
    Ok(s)
}

pub fn legal_shapes(n: usize, cols: usize) -> Result<Vec<Shape>> {
    check_geometry(n, cols)?;
    (0..=shape_length(n, cols))
        .map(|t| legal_shape(t, n, cols))
        .collect()
}

/// Where a single-site rule applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Edge {
    FirstColumn,
    LastColumn,
    BottomRow,
    TopRightCorner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `(left, right)` may not be horizontal neighbours.
    Horizontal(Phase, Phase),
    /// `(top, bottom)` may not be vertical neighbours.
    Vertical(Phase, Phase),
    /// The phase may not occupy this edge of the grid.
    Boundary(Phase, Edge),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Horizontal(a, b) => write!(f, "{a} left of {b}"),
            Rule::Vertical(a, b) => write!(f, "{a} above {b}"),
            Rule::Boundary(p, e) => write!(f, "{p} on {e:?}"),
        }
    }
}

/// A violated rule, located at the left/top site of the offending pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub row: usize,
    pub col: usize,
}

fn in_fsg(p: Phase) -> bool {
    matches!(p, Phase::First | Phase::Second | Phase::Flag)
}

pub fn horizontal_forbidden(left: Phase, right: Phase) -> bool {
    use Phase::*;
    match (left, right) {
        (Unborn, r) => r != Unborn,
        (Dead, Unborn) => true,
        (l, Dead) => l != Dead,
        (l, r) if in_fsg(l) && in_fsg(r) => true,
        (l, Marker) => l != Second && l != Unborn,
        (Marker, r) => in_fsg(r),
        _ => false,
    }
}

pub fn vertical_forbidden(top: Phase, bottom: Phase) -> bool {
    use Phase::*;
    matches!(
        (top, bottom),
        (Unborn | First | Dead | Flag, Second)
            | (First, Unborn | Dead | Flag)
            | (Unborn, Dead)
            | (Dead, Unborn)
            | (Second | Flag, Unborn)
            | (Dead, First | Flag)
            | (Unborn, First)
            | (First | Second | Dead | Flag, Marker)
            | (Marker, Unborn | Second | Dead | Flag)
            | (Flag, Dead | Flag)
            | (Marker, Marker)
            | (Second, First)
    )
}

/// Edges of the grid on which `p` may not sit at `(row, col)`.
pub fn boundary_forbidden(p: Phase, row: usize, col: usize, n: usize, last: usize) -> Vec<Edge> {
    use Phase::*;
    let mut out = Vec::new();
    if col == 0 && matches!(p, Unborn | Marker) {
        out.push(Edge::FirstColumn);
    }
    if col == last && matches!(p, Dead | Second) {
        out.push(Edge::LastColumn);
    }
    if row == n && p == Second {
        out.push(Edge::BottomRow);
    }
    if row == 1 && col == last && p == Flag {
        out.push(Edge::TopRightCorner);
    }
    out
}

pub fn shape_violations(shape: &Shape) -> Vec<Violation> {
    let (n, last) = (shape.n, shape.cols);
    let mut out = Vec::new();
    for row in 1..=n {
        for col in 0..=last {
            let p = shape.get(row, col);
            for e in boundary_forbidden(p, row, col, n, last) {
                out.push(Violation {
                    rule: Rule::Boundary(p, e),
                    row,
                    col,
                });
            }
            if col < last {
                let q = shape.get(row, col + 1);
                if horizontal_forbidden(p, q) {
                    out.push(Violation {
                        rule: Rule::Horizontal(p, q),
                        row,
                        col,
                    });
                }
            }
            if row < n {
                let q = shape.get(row + 1, col);
                if vertical_forbidden(p, q) {
                    out.push(Violation {
                        rule: Rule::Vertical(p, q),
                        row,
                        col,
                    });
                }
            }
        }
    }
    out
}

/// Every violated local rule of `config`; empty iff the skeleton is legal.
pub fn check_forbidden(config: &GridConfig) -> Vec<Violation> {
    shape_violations(&config.shape())
}

fn violation_count(cells: &[Phase], n: usize, last: usize) -> usize {
    let w = last + 1;
    let mut count = 0;
    for (s, &p) in cells.iter().enumerate() {
        let (row, col) = (s / w + 1, s % w);
        count += boundary_forbidden(p, row, col, n, last).len();
        if col < last && horizontal_forbidden(p, cells[s + 1]) {
            count += 1;
        }
        if row < n && vertical_forbidden(p, cells[s + w]) {
            count += 1;
        }
    }
    count
}

/// All violation-free phase skeletons, by exhaustive enumeration.
pub fn violation_free_shapes(n: usize, cols: usize) -> Result<Vec<Shape>> {
    let sites = n * (cols + 1);
    budget(
        "phase-skeleton enumeration",
        sites as u128,
        MAX_ENUM_SITES as u128,
    )?;
    let total = 6usize.pow(sites as u32);
    let mut cells = vec![Phase::Unborn; sites];
    let mut out = Vec::new();
    for mut idx in 0..total {
        for s in (0..sites).rev() {
            cells[s] = PHASES[idx % 6];
            idx /= 6;
        }
        if violation_count(&cells, n, cols) == 0 {
            out.push(Shape {
                n,
                cols,
                cells: cells.clone(),
            });
        }
    }
    Ok(out)
}

/// Whether the violation-free skeletons are exactly the legal shapes.
pub fn rules_match_shapes(n: usize, cols: usize) -> Result<bool> {
    let free: BTreeSet<Shape> = violation_free_shapes(n, cols)?.into_iter().collect();
    let legal: BTreeSet<Shape> = legal_shapes(n, cols)?.into_iter().collect();
    Ok(free == legal)
}

/// A round-normalized circuit laid out on `T` columns; rounds beyond the
/// circuit's own are identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCircuit {
    n: usize,
    cols: usize,
    rounds: usize,
    slots: Vec<Gate>,
}

impl GridCircuit {
    pub fn new(circuit: &CircuitIR, cols: usize) -> Result<Self> {
        let n = circuit.n();
        check_geometry(n, cols)?;
        let base = if circuit.round_size() == Some(n) {
            circuit.clone()
        } else {
            normalize_rounds(circuit)?
        };
        let rounds = base.len() / n;
        if rounds > cols {
            return Err(invalid(format!(
                "{rounds} rounds do not fit on T = {cols} columns"
            )));
        }
        let mut slots = base.gates().to_vec();
        for _ in rounds..cols {
            slots.push(Gate::identity(1));
            slots.extend((1..n).map(pair_identity).collect::<Result<Vec<_>>>()?);
        }
        for (i, g) in slots.iter().enumerate() {
            let s = i % n;
            let want = if s == 0 { vec![1] } else { vec![s, s + 1] };
            if g.wires() != want.as_slice() {
                return Err(invalid(format!(
                    "slot {s} holds a gate on wires {:?}",
                    g.wires()
                )));
            }
        }
        Ok(GridCircuit {
            n,
            cols,
            rounds,
            slots,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Rounds taken by the circuit before identity padding.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn length(&self) -> usize {
        shape_length(self.n, self.cols)
    }

    /// The gate applied by transition `l` (from shape `l−1` to `l`), or
    /// `None` on upward steps.
    pub fn transition_gate(&self, l: usize) -> Option<&Gate> {
        assert!(
            (1..=self.length()).contains(&l),
            "transition {l} outside 1..={}",
            self.length()
        );
        let period = 3 * self.n - 1;
        let (r, k) = ((l - 1) / period, (l - 1) % period + 1);
        (k <= self.n).then(|| &self.slots[r * self.n + k - 1])
    }

    /// Encoded states `ψ_0 .. ψ_L` for input `|j⟩`.
    pub fn states_from(&self, j: usize) -> Result<Vec<Vec<C64>>> {
        let dim = 1usize << self.n;
        if j >= dim {
            return Err(Error::OutOfRange {
                index: j,
                max: dim - 1,
            });
        }
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[j] = C64::new(1.0, 0.0);
        let mut out = vec![psi.clone()];
        for l in 1..=self.length() {
            if let Some(g) = self.transition_gate(l) {
                g.apply(self.n, &mut psi);
            }
            out.push(psi.clone());
        }
        Ok(out)
    }
}

fn pair_identity(k: usize) -> Result<Gate> {
    let m = (0..16)
        .map(|i| C64::new(if i % 5 == 0 { 1.0 } else { 0.0 }, 0.0))
        .collect();
    Gate::new(vec![k, k + 1], m)
}

/// `γ(t)` for input `|j⟩`: the legal shape and the encoded amplitudes.
pub fn gamma_state(circuit: &GridCircuit, t: usize, j: usize) -> Result<(Shape, Vec<C64>)> {
    let shape = legal_shape(t, circuit.n, circuit.cols)?;
    let mut states = circuit.states_from(j)?;
    Ok((shape, states.swap_remove(t)))
}

/// One propagation term: a local before/after pattern on `support`.
#[derive(Clone, Debug)]
pub struct Transition {
    pub l: usize,
    pub changed: Vec<usize>,
    pub support: Vec<usize>,
    pub before: Vec<Phase>,
    pub after: Vec<Phase>,
    pub gate: Option<Gate>,
}

impl Transition {
    /// Rows whose sites change shape.
    pub fn changed_rows(&self, cols: usize) -> BTreeSet<usize> {
        self.changed.iter().map(|&s| row_col(cols, s).0).collect()
    }
}

fn neighbours(n: usize, cols: usize, s: usize) -> Vec<usize> {
    let (row, col) = row_col(cols, s);
    let mut out = Vec::with_capacity(4);
    if row > 1 {
        out.push(site(cols, row - 1, col));
    }
    if row < n {
        out.push(site(cols, row + 1, col));
    }
    if col > 0 {
        out.push(s - 1);
    }
    if col < cols {
        out.push(s + 1);
    }
    out
}

fn ambiguity(shapes: &[Shape], l: usize, support: &BTreeSet<usize>) -> usize {
    let matches = |target: usize| {
        shapes
            .iter()
            .enumerate()
            .filter(|&(t, s)| {
                t != target
                    && support
                        .iter()
                        .all(|&x| s.cells[x] == shapes[target].cells[x])
            })
            .count()
    };
    matches(l - 1) + matches(l)
}

/// All `L` transitions. Each support starts from the changed sites and grows
/// by the neighbouring site that most reduces ambiguity (ties to the lowest
/// index) until the before pattern singles out shape `l−1` and the after
/// pattern shape `l` among all legal shapes.
pub fn transitions(circuit: &GridCircuit) -> Result<Vec<Transition>> {
    let (n, cols) = (circuit.n, circuit.cols);
    let shapes = legal_shapes(n, cols)?;
    let mut out = Vec::with_capacity(shapes.len() - 1);
    for l in 1..shapes.len() {
        let (b, a) = (&shapes[l - 1], &shapes[l]);
        let changed: Vec<usize> = (0..b.cells.len())
            .filter(|&s| b.cells[s] != a.cells[s])
            .collect();
        let mut support: BTreeSet<usize> = changed.iter().copied().collect();
        while ambiguity(&shapes, l, &support) > 0 {
            let frontier: BTreeSet<usize> = support
                .iter()
                .flat_map(|&s| neighbours(n, cols, s))
                .filter(|s| !support.contains(s))
                .collect();
            let best = frontier
                .into_iter()
                .min_by_key(|&x| {
                    let mut grown = support.clone();
                    grown.insert(x);
                    (ambiguity(&shapes, l, &grown), x)
                })
                .expect("a legal shape is determined by the whole grid");
            support.insert(best);
        }
        let support: Vec<usize> = support.into_iter().collect();
        let gate = circuit.transition_gate(l).cloned();
        if let Some(g) = &gate {
            for &w in g.wires() {
                let on_support = changed.iter().any(|&s| row_col(cols, s).0 == w);
                if !on_support {
                    return Err(invalid(format!(
                        "transition {l} gates wire {w} away from its changed sites"
                    )));
                }
            }
        }
        out.push(Transition {
            l,
            before: support.iter().map(|&s| b.cells[s]).collect(),
            after: support.iter().map(|&s| a.cells[s]).collect(),
            changed,
            support,
            gate,
        });
    }
    Ok(out)
}

/// `J = ε^{−2} L^6`.
pub fn coupling(length: usize, epsilon: f64) -> f64 {
    (length as f64).powi(6) / (epsilon * epsilon)
}

/// Default target `ε = 1/L`.
pub fn default_epsilon(length: usize) -> f64 {
    1.0 / length as f64
}

#[derive(Clone, Copy, Debug)]
enum Propagation {
    None,
    All,
    Only(usize),
}

fn full_dim(circuit: &GridCircuit) -> Result<usize> {
    let sites = circuit.n * (circuit.cols + 1);
    budget("2D grid sites", sites as u128, MAX_DENSE_SITES as u128)?;
    Ok(9usize.pow(sites as u32))
}

fn assemble(
    circuit: &GridCircuit,
    input: f64,
    clock: f64,
    prop: Propagation,
) -> Result<SparseOperator> {
    let dim = full_dim(circuit)?;
    let (n, cols) = (circuit.n, circuit.cols);
    let sites = n * (cols + 1);
    let steps: Vec<Transition> = match prop {
        Propagation::None => Vec::new(),
        Propagation::All => transitions(circuit)?,
        Propagation::Only(l) => {
            let all = transitions(circuit)?;
            vec![all
                .into_iter()
                .nth(l.wrapping_sub(1))
                .ok_or(Error::OutOfRange {
                    index: l,
                    max: circuit.length(),
                })?]
        }
    };
    let pow9: Vec<usize> = (0..sites)
        .map(|s| 9usize.pow((sites - 1 - s) as u32))
        .collect();
    let mut tb = TripletBuilder::new(dim);
    let mut digits = vec![0usize; sites];
    let mut phases = vec![Phase::Unborn; sites];
    let mut bits = vec![0u8; n + 1];
    for idx in 0..dim {
        let mut rest = idx;
        for s in (0..sites).rev() {
            digits[s] = rest % 9;
            phases[s] = PHASE_OF[digits[s]];
            rest /= 9;
        }
        let mut diag = 0.0;
        if input != 0.0 {
            let hits = (1..=n)
                .filter(|&row| digits[site(cols, row, 0)] == Symbol::First1.index())
                .count();
            diag += input * hits as f64;
        }
        if clock != 0.0 {
            diag += clock * violation_count(&phases, n, cols) as f64;
        }
        for st in &steps {
            if st
                .support
                .iter()
                .zip(&st.after)
                .all(|(&s, &p)| phases[s] == p)
            {
                diag += 0.5;
            }
            if !st
                .support
                .iter()
                .zip(&st.before)
                .all(|(&s, &p)| phases[s] == p)
            {
                continue;
            }
            diag += 0.5;
            for &s in &st.support {
                if let Some(b) = SYMBOLS[digits[s]].bit() {
                    bits[row_col(cols, s).0] = b;
                }
            }
            let target = |bits: &[u8]| {
                st.support.iter().zip(&st.after).fold(idx, |acc, (&s, &p)| {
                    let sym = Symbol::with_bit(p, bits[row_col(cols, s).0]);
                    acc - digits[s] * pow9[s] + sym.index() * pow9[s]
                })
            };
            match &st.gate {
                None => {
                    tb.add_hermitian_pair(target(&bits), idx, C64::new(-0.5, 0.0));
                }
                Some(g) => {
                    let w = g.wires();
                    let x = w.iter().fold(0usize, |acc, &q| 2 * acc + bits[q] as usize);
                    let mut out_bits = bits.clone();
                    for y in 0..1usize << w.len() {
                        let u = g.entry(y, x);
                        if u == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (i, &q) in w.iter().enumerate() {
                            out_bits[q] = ((y >> (w.len() - 1 - i)) & 1) as u8;
                        }
                        tb.add_hermitian_pair(target(&out_bits), idx, -0.5 * u);
                    }
                }
            }
        }
        if diag != 0.0 {
            tb.add(idx, idx, C64::new(diag, 0.0));
        }
    }
    tb.build()
}

/// `H_2D = ½ Σ_ℓ H_ℓ + H_input + J·H_clock` on the full `9^{n(T+1)}` space.
pub fn assemble_h2d(circuit: &GridCircuit, epsilon: f64) -> Result<SparseOperator> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon {epsilon} must be positive")));
    }
    assemble(
        circuit,
        1.0,
        coupling(circuit.length(), epsilon),
        Propagation::All,
    )
}

/// `H_input`: one unit of energy per `F1` site in column 0.
pub fn input_term(circuit: &GridCircuit) -> Result<SparseOperator> {
    assemble(circuit, 1.0, 0.0, Propagation::None)
}

/// `H_clock`: one unit of energy per violated local rule.
pub fn clock_term(circuit: &GridCircuit) -> Result<SparseOperator> {
    assemble(circuit, 0.0, 1.0, Propagation::None)
}

/// `½ H_ℓ` for a single transition.
pub fn propagation_term(circuit: &GridCircuit, l: usize) -> Result<SparseOperator> {
    assemble(circuit, 0.0, 0.0, Propagation::Only(l))
}

/// Full-space indices of all legal configurations (legal shape, any bits).
pub fn legal_indices(n: usize, cols: usize) -> Result<Vec<usize>> {
    budget(
        "2D grid sites",
        (n * (cols + 1)) as u128,
        MAX_DENSE_SITES as u128,
    )?;
    let mut out = Vec::new();
    for shape in legal_shapes(n, cols)? {
        for x in 0..1usize << n {
            out.push(GridConfig::from_shape(&shape, x).dense_index());
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Whether no entry of `op` couples a legal configuration to an illegal one.
pub fn legal_block_diagonal(op: &SparseOperator, n: usize, cols: usize) -> Result<bool> {
    let legal: BTreeSet<usize> = legal_indices(n, cols)?.into_iter().collect();
    Ok(op
        .triplets()
        .all(|(r, c, _)| legal.contains(&r) == legal.contains(&c)))
}

/// The structured history state `(1/√(L+1)) Σ_t γ(t)` for input `|0^n⟩`.
#[derive(Clone, Debug)]
pub struct GridHistoryState {
    circuit: GridCircuit,
    shapes: Vec<Shape>,
    amps: Vec<Vec<C64>>,
}

impl GridHistoryState {
    pub fn new(circuit: GridCircuit) -> Result<Self> {
        let shapes = legal_shapes(circuit.n, circuit.cols)?;
        let amps = circuit.states_from(0)?;
        Ok(GridHistoryState {
            circuit,
            shapes,
            amps,
        })
    }

    pub fn circuit(&self) -> &GridCircuit {
        &self.circuit
    }

    pub fn n(&self) -> usize {
        self.circuit.n
    }

    /// `L`; there are `L + 1` components.
    pub fn length(&self) -> usize {
        self.shapes.len() - 1
    }

    pub fn shape(&self, t: usize) -> &Shape {
        &self.shapes[t]
    }

    pub fn amplitudes(&self, t: usize) -> &[C64] {
        &self.amps[t]
    }

    pub fn output(&self) -> &[C64] {
        &self.amps[self.length()]
    }

    /// Uniform weights `1/√(L+1)` over all components.
    pub fn ground_weights(&self) -> Vec<(usize, f64)> {
        let w = 1.0 / ((self.length() + 1) as f64).sqrt();
        (0..=self.length()).map(|t| (t, w)).collect()
    }

    /// Uniform superposition over the shapes of `turn`.
    pub fn turn_weights(&self, turn: &Turn) -> Vec<(usize, f64)> {
        let w = 1.0 / (turn.len() as f64).sqrt();
        (turn.start..=turn.end).map(|t| (t, w)).collect()
    }

    /// `⟨γ(t1)|γ(t2)⟩`, zero whenever the skeletons differ.
    pub fn component_overlap(&self, t1: usize, t2: usize) -> C64 {
        if self.shapes[t1] != self.shapes[t2] {
            return C64::new(0.0, 0.0);
        }
        self.amps[t1]
            .iter()
            .zip(&self.amps[t2])
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self, weights: &[(usize, f64)]) -> f64 {
        let mut total = 0.0;
        for &(t1, w1) in weights {
            for &(t2, w2) in weights {
                total += w1 * w2 * self.component_overlap(t1, t2).re;
            }
        }
        total
    }

    /// Dense export of a weighted superposition, for grids of at most
    /// `MAX_DENSE_SITES` sites.
    pub fn to_dense_with(&self, weights: &[(usize, f64)]) -> Result<Vec<C64>> {
        let dim = full_dim(&self.circuit)?;
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for &(t, w) in weights {
            for (x, &a) in self.amps[t].iter().enumerate() {
                v[GridConfig::from_shape(&self.shapes[t], x).dense_index()] += w * a;
            }
        }
        Ok(v)
    }

    pub fn to_dense(&self) -> Result<Vec<C64>> {
        self.to_dense_with(&self.ground_weights())
    }

    /// Coefficient matrices of several superpositions across the cut below
    /// row `c`, in one shared basis of the configurations that occur.
    pub fn split_matrices(
        &self,
        states: &[&[(usize, f64)]],
        c: usize,
    ) -> Result<Vec<DMatrix<C64>>> {
        let n = self.n();
        if !(1..n).contains(&c) {
            return Err(invalid(format!("cut row {c} outside 1..{n}")));
        }
        let top = c * (self.circuit.cols + 1);
        let mut a_keys: BTreeMap<&[Phase], usize> = BTreeMap::new();
        let mut b_keys: BTreeMap<&[Phase], usize> = BTreeMap::new();
        for w in states {
            for &(t, _) in w.iter() {
                let cells = &self.shapes[t].cells;
                let na = a_keys.len();
                a_keys.entry(&cells[..top]).or_insert(na);
                let nb = b_keys.len();
                b_keys.entry(&cells[top..]).or_insert(nb);
            }
        }
        let (ba, bb) = (1usize << c, 1usize << (n - c));
        let mut out = Vec::with_capacity(states.len());
        for w in states {
            let mut m = DMatrix::zeros(a_keys.len() * ba, b_keys.len() * bb);
            for &(t, wt) in w.iter() {
                let cells = &self.shapes[t].cells;
                let (ia, ib) = (a_keys[&cells[..top]], b_keys[&cells[top..]]);
                for (x, &amp) in self.amps[t].iter().enumerate() {
                    m[(ia * ba + (x >> (n - c)), ib * bb + (x & (bb - 1)))] += wt * amp;
                }
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Entropy (bits) of rows `1..=c` for a weighted superposition, by SVD of
    /// its coefficient matrix.
    pub fn entropy_of(&self, weights: &[(usize, f64)], c: usize) -> Result<f64> {
        let m = self
            .split_matrices(&[weights], c)?
            .pop()
            .expect("one matrix");
        Ok(entropy_from_singular_values(m.singular_values().iter().copied()).max(0.0))
    }

    /// Entropy of the ground (history) state across the cut below row `c`.
    pub fn entropy_direct(&self, c: usize) -> Result<f64> {
        self.entropy_of(&self.ground_weights(), c)
    }

    /// Entropy of `ψ_output` on qubits `1..=c`.
    pub fn output_entropy(&self, c: usize) -> Result<f64> {
        let out = StateVector::new(self.n(), self.output().to_vec())?;
        entropy_exact(&out, &Cut::prefix(self.n(), c)?)
    }

    /// Cutwise orthogonality of two weighted superpositions across row `c`.
    pub fn cutwise_orthogonal(
        &self,
        s1: &[(usize, f64)],
        s2: &[(usize, f64)],
        c: usize,
    ) -> Result<bool> {
        let m = self.split_matrices(&[s1, s2], c)?;
        Ok(cutwise_orthogonal(&m[0], &m[1]))
    }
}

fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Cutwise orthogonality of two pure states given as coefficient matrices
/// `M[a, b]` in a shared product basis: `ρ₁ᴬρ₂ᴬ = 0` and `ρ₁ᴮρ₂ᴮ = 0`.
pub fn cutwise_orthogonal(m1: &DMatrix<C64>, m2: &DMatrix<C64>) -> bool {
    assert_eq!(
        m1.shape(),
        m2.shape(),
        "coefficient matrices must share a basis"
    );
    let ra = (m1 * m1.adjoint()) * (m2 * m2.adjoint());
    let rb = (m1.transpose() * m1.conjugate()) * (m2.transpose() * m2.conjugate());
    spectral_norm(&ra) <= ORTHO_TOL && spectral_norm(&rb) <= ORTHO_TOL
}

/// Dense form: `v1`, `v2` are `da·db` amplitude vectors, index `a·db + b`.
pub fn cutwise_orthogonal_vectors(v1: &[C64], v2: &[C64], da: usize, db: usize) -> Result<bool> {
    if v1.len() != da * db || v2.len() != da * db {
        return Err(Error::LengthMismatch {
            expected: da * db,
            got: v1.len().min(v2.len()),
        });
    }
    let m1 = DMatrix::from_row_slice(da, db, v1);
    let m2 = DMatrix::from_row_slice(da, db, v2);
    Ok(cutwise_orthogonal(&m1, &m2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Above,
    Below,
}

/// A maximal run of shapes `start..=end` whose internal transitions all
/// change sites on one side of the cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Turn {
    pub p: usize,
    pub start: usize,
    pub end: usize,
    /// `None` for a single-shape turn.
    pub side: Option<Side>,
}

impl Turn {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|α_p|² = (t_e − t_s + 1)/(L + 1)`.
    pub fn weight(&self, length: usize) -> f64 {
        self.len() as f64 / (length + 1) as f64
    }
}

/// Splits `[0, L]` into turns for the cut between rows `c` and `c+1`. A new
/// turn opens at every transition that changes rows on both sides, or on the
/// other side from the current turn.
pub fn turns(c: usize, n: usize, cols: usize) -> Result<Vec<Turn>> {
    check_geometry(n, cols)?;
    if !(1..n).contains(&c) {
        return Err(invalid(format!("cut row {c} outside 1..{n}")));
    }
    let shapes = legal_shapes(n, cols)?;
    let mut out = vec![Turn {
        p: 1,
        start: 0,
        end: 0,
        side: None,
    }];
    for l in 1..shapes.len() {
        let rows: BTreeSet<usize> = (0..shapes[l].cells.len())
            .filter(|&s| shapes[l - 1].cells[s] != shapes[l].cells[s])
            .map(|s| row_col(cols, s).0)
            .collect();
        let side = if rows.iter().all(|&r| r <= c) {
            Some(Side::Above)
        } else if rows.iter().all(|&r| r > c) {
            Some(Side::Below)
        } else {
            None
        };
        let cur = out.last_mut().expect("nonempty");
        match (side, cur.side) {
            (Some(s), None) if cur.start == cur.end => {
                cur.side = Some(s);
                cur.end = l;
            }
            (Some(s), Some(t)) if s == t => cur.end = l,
            _ => {
                let p = out.len() + 1;
                out.push(Turn {
                    p,
                    start: l,
                    end: l,
                    side: None,
                });
            }
        }
    }
    Ok(out)
}

/// `Σ_p |α_p|² log₂(1/|α_p|²)`.
pub fn mixing_term(turns: &[Turn], length: usize) -> f64 {
    turns
        .iter()
        .map(|t| {
            let w = t.weight(length);
            -w * w.log2()
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct TurnEntropy {
    pub cut: usize,
    pub turns: Vec<Turn>,
    pub weights: Vec<f64>,
    pub turn_entropies: Vec<f64>,
    pub mixing: f64,
    /// `Σ_p |α_p|² S(ζ_A(p)) + mixing`.
    pub total: f64,
    pub output_entropy: f64,
    pub n: usize,
}

impl TurnEntropy {
    /// `(1 − 1/n)·S_out`.
    pub fn lower_bound(&self) -> f64 {
        (1.0 - 1.0 / self.n as f64) * self.output_entropy
    }

    /// `S_out + mixing`.
    pub fn upper_bound(&self) -> f64 {
        self.output_entropy + self.mixing
    }

    pub fn bounds_hold(&self) -> bool {
        self.lower_bound() <= self.total && self.total <= self.upper_bound()
    }
}

/// Ground-state entropy across the cut below row `c`, assembled turn by turn.
pub fn entropy_via_turns(history: &GridHistoryState, c: usize) -> Result<TurnEntropy> {
    let ts = turns(c, history.n(), history.circuit.cols)?;
    let length = history.length();
    let weights: Vec<f64> = ts.iter().map(|t| t.weight(length)).collect();
    let turn_entropies = ts
        .iter()
        .map(|t| history.entropy_of(&history.turn_weights(t), c))
        .collect::<Result<Vec<f64>>>()?;
    let mixing = mixing_term(&ts, length);
    let total = weights
        .iter()
        .zip(&turn_entropies)
        .map(|(w, s)| w * s)
        .sum::<f64>()
        + mixing;
    Ok(TurnEntropy {
        cut: c,
        turns: ts,
        weights,
        turn_entropies,
        mixing,
        total,
        output_entropy: history.output_entropy(c)?,
        n: history.n(),
    })
}

/// Result of comparing the structured history state with the lowest
/// eigenvector of `H_2D`.
#[derive(Clone, Debug, Serialize)]
pub struct GroundCheck {
    pub dim: usize,
    pub coupling: f64,
    pub lambda_min: f64,
    pub gap: f64,
    pub history_energy: f64,
    pub overlap: f64,
    pub block_diagonal: bool,
    pub residual: f64,
}

/// Builds `H_2D`, runs Lanczos from a random vector on the legal
/// configurations and compares with the exported history state.
pub fn ground_check(
    history: &GridHistoryState,
    epsilon: f64,
    tol: f64,
    seed: Seed,
) -> Result<GroundCheck> {
    let circuit = history.circuit();
    let h = assemble_h2d(circuit, epsilon)?;
    let block_diagonal = legal_block_diagonal(&h, circuit.n, circuit.cols)?;
    let mut rng = seed.derive("grid2d-legal-start", 0).rng();
    let mut start = vec![C64::new(0.0, 0.0); h.dim()];
    for i in legal_indices(circuit.n, circuit.cols)? {
        start[i] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let opts = LanczosOptions {
        tol,
        seed,
        start: Some(start),
        strategy: Strategy::Plain,
        ..LanczosOptions::default()
    };
    let gs = ground_state_with(&h, &opts)?;
    let psi = history.to_dense()?;
    let history_energy = h.expectation(&psi).re;
    let overlap = psi
        .iter()
        .zip(&gs.vector)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .norm_sqr();
    Ok(GroundCheck {
        dim: h.dim(),
        coupling: coupling(circuit.length(), epsilon),
        lambda_min: gs.energy,
        gap: gs.gap,
        history_energy,
        overlap,
        block_diagonal,
        residual: gs.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;

    fn parse(rows: &[&str]) -> Shape {
        rows.join("\n").parse::<GridConfig>().unwrap().shape()
    }

    fn empty(n: usize) -> CircuitIR {
        CircuitIR::new(n, vec![]).unwrap()
    }

    #[test]
    fn symbol_codes_and_bits() {
        for (i, s) in SYMBOLS.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(s.code().parse::<Symbol>().unwrap(), *s);
            assert_eq!(s.bit().is_some(), s.phase().carries_bit());
            assert_eq!(Symbol::with_bit(s.phase(), s.bit().unwrap_or(0)), *s);
        }
        assert!("XX".parse::<Symbol>().is_err());
    }

    #[test]
    fn shape_zero_and_figure_panels() {
        let s0 = legal_shape(0, 6, 2).unwrap();
        assert_eq!(
            (1..=6).map(|r| s0.get(r, 0)).collect::<Vec<_>>(),
            vec![Phase::First; 6]
        );
        assert!((1..=6).all(|r| s0.get(r, 1) == Phase::Unborn && s0.get(r, 2) == Phase::Unborn));

        let s8 = legal_shape(8, 6, 2).unwrap();
        let want = parse(&[
            "S0 UN UN", "S0 UN UN", "S0 UN UN", "S0 UN UN", "S0 MK UN", "DE F0 UN",
        ]);
        assert_eq!(s8, want);

        let s19 = legal_shape(19, 6, 2).unwrap();
        assert!(s19.cells().iter().all(|&p| p != Phase::Marker));
        assert_eq!(s19.get(2, 1), Phase::Flag);
        assert_eq!(s19.get(1, 1), Phase::Second);
        assert!((1..=6).all(|r| s19.get(r, 0) == Phase::Dead));

        assert_eq!(legal_shapes(6, 2).unwrap().len(), 35);
        assert!(legal_shape(35, 6, 2).is_err());
        assert!(legal_shape(0, 1, 2).is_err());
    }

    #[test]
    fn every_shape_has_one_active_site_per_row() {
        for n in 2..=6 {
            for shape in legal_shapes(n, 3).unwrap() {
                assert!(shape.active_columns().is_some(), "{shape}");
            }
        }
    }

    #[test]
    fn legal_shapes_are_violation_free() {
        for n in 2..=6 {
            for cols in 1..=3 {
                let shapes = legal_shapes(n, cols).unwrap();
                let distinct: BTreeSet<&Shape> = shapes.iter().collect();
                assert_eq!(distinct.len(), shapes.len());
                for s in &shapes {
                    assert!(
                        shape_violations(s).is_empty(),
                        "n={n} T={cols}\n{s}{:?}",
                        shape_violations(s)
                    );
                }
            }
        }
    }

    #[test]
    fn unborn_left_of_dead_is_flagged() {
        let cfg: GridConfig = "F0 UN DE\nF0 UN UN".parse().unwrap();
        let v = check_forbidden(&cfg);
        assert!(v
            .iter()
            .any(|x| x.rule == Rule::Horizontal(Phase::Unborn, Phase::Dead)
                && x.row == 1
                && x.col == 1));
    }

    #[test]
    fn rules_single_out_legal_shapes() {
        for (n, cols) in [(2, 1), (2, 2), (3, 1)] {
            assert!(rules_match_shapes(n, cols).unwrap(), "n={n} T={cols}");
        }
    }

    #[test]
    fn config_text_roundtrip_and_dense_index() {
        let shape = legal_shape(4, 3, 2).unwrap();
        let cfg = GridConfig::from_shape(&shape, 0b101);
        let text = cfg.to_string();
        assert_eq!(text.parse::<GridConfig>().unwrap(), cfg);
        let back = GridConfig::from_dense_index(3, 2, cfg.dense_index()).unwrap();
        assert_eq!(back, cfg);
        assert!("F0 UN\nF0".parse::<GridConfig>().is_err());
    }

    #[test]
    fn supports_are_unambiguous_and_contain_changes() {
        let circuit = GridCircuit::new(&empty(3), 2).unwrap();
        let shapes = legal_shapes(3, 2).unwrap();
        for tr in transitions(&circuit).unwrap() {
            assert!(tr.changed.iter().all(|s| tr.support.contains(s)));
            let matches = |pat: &[Phase]| {
                shapes
                    .iter()
                    .filter(|s| tr.support.iter().zip(pat).all(|(&x, &p)| s.cells()[x] == p))
                    .count()
            };
            assert_eq!(matches(&tr.before), 1);
            assert_eq!(matches(&tr.after), 1);
        }
    }

    #[test]
    fn gate_schedule_follows_rounds() {
        let base = normalize_rounds(&random_circuit(3, 4, Seed::from_u64(3)).unwrap()).unwrap();
        let rounds = base.len() / 3;
        let circuit = GridCircuit::new(&base, rounds + 1).unwrap();
        let states = circuit.states_from(0).unwrap();
        let want = base.output_state().unwrap();
        let period = 8;
        let done = &states[period * rounds];
        for (a, b) in done.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(circuit.transition_gate(4).is_none());
        if rounds >= 2 {
            assert!(GridCircuit::new(&base, rounds - 1).is_err());
        }
    }

    #[test]
    fn history_components_are_orthogonal_and_normalised() {
        let base = normalize_rounds(&random_circuit(3, 3, Seed::from_u64(5)).unwrap()).unwrap();
        let cols = base.len() / 3 + 1;
        let h = GridHistoryState::new(GridCircuit::new(&base, cols).unwrap()).unwrap();
        for t1 in 0..=h.length() {
            for t2 in 0..=h.length() {
                let o = h.component_overlap(t1, t2).norm();
                assert!(if t1 == t2 {
                    (o - 1.0).abs() < 1e-12
                } else {
                    o == 0.0
                });
            }
        }
        assert!((h.norm_sqr(&h.ground_weights()) - 1.0).abs() < 1e-12);
        let (shape, amps) = gamma_state(h.circuit(), 0, 0).unwrap();
        assert_eq!(shape, legal_shape(0, 3, cols).unwrap());
        assert_eq!(amps[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn small_hamiltonian_is_frustration_free_on_history() {
        let base = normalize_rounds(&random_circuit(2, 2, Seed::from_u64(9)).unwrap()).unwrap();
        let base = CircuitIR::new(2, base.gates()[..2].to_vec()).unwrap();
        let circuit = GridCircuit::new(&base, 1).unwrap();
        let hist = GridHistoryState::new(circuit.clone()).unwrap();
        let psi = hist.to_dense().unwrap();
        let h = assemble_h2d(&circuit, 0.5).unwrap();
        assert!(h.is_hermitian(1e-12));
        assert!(h.expectation(&psi).re.abs() < 1e-9);
        assert!(legal_block_diagonal(&h, 2, 1).unwrap());
        let hc = clock_term(&circuit).unwrap();
        let hi = input_term(&circuit).unwrap();
        assert!(hc.triplets().all(|(r, c, v)| r == c && v.re >= 0.0));
        assert!(hi.triplets().all(|(r, c, v)| r == c && v.re >= 0.0));
        assert!(hc.expectation(&psi).norm() < 1e-12 && hi.expectation(&psi).norm() < 1e-12);
        for l in 1..=circuit.length() {
            let term = propagation_term(&circuit, l).unwrap();
            let pair = [(l - 1, 1.0 / 2f64.sqrt()), (l, 1.0 / 2f64.sqrt())];
            let v = hist.to_dense_with(&pair).unwrap();
            let hv = term.matvec(&v);
            assert!(
                hv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9,
                "transition {l}"
            );
        }
    }

    #[test]
    fn coupling_scales_inverse_square() {
        let j1 = coupling(10, 0.1);
        let j2 = coupling(10, 0.2);
        assert!((j1 / j2 - 4.0).abs() < 1e-12);
        assert!((coupling(10, default_epsilon(10)) - 1e8).abs() < 1e-3);
    }

    #[test]
    fn turns_partition_and_first_turn() {
        let ts = turns(3, 6, 2).unwrap();
        assert_eq!((ts[0].start, ts[0].end), (0, 3));
        assert_eq!((ts[1].start, ts[1].end), (4, 11));
        assert_eq!(ts[2].start, 12);
        // two crossings per round
        assert_eq!(ts.len(), 2 * 2 + 1);
        let mut next = 0;
        for (i, t) in ts.iter().enumerate() {
            assert_eq!(t.p, i + 1);
            assert_eq!(t.start, next);
            next = t.end + 1;
        }
        assert_eq!(next, shape_length(6, 2) + 1);
        assert!(turns(0, 6, 2).is_err() && turns(6, 6, 2).is_err());
    }

    #[test]
    fn cutwise_orthogonality_basics() {
        let e = |i: usize, d: usize| {
            let mut v = vec![C64::new(0.0, 0.0); d];
            v[i] = C64::new(1.0, 0.0);
            v
        };
        let v = e(0, 4);
        assert!(!cutwise_orthogonal_vectors(&v, &v, 2, 2).unwrap());
        assert!(cutwise_orthogonal_vectors(&e(0, 4), &e(3, 4), 2, 2).unwrap());
        // same A-side, different B-side
        assert!(!cutwise_orthogonal_vectors(&e(0, 4), &e(1, 4), 2, 2).unwrap());
    }

    #[test]
    fn identity_circuit_entropy_is_pure_mixing() {
        let h = GridHistoryState::new(GridCircuit::new(&empty(4), 3).unwrap()).unwrap();
        let te = entropy_via_turns(&h, 2).unwrap();
        assert!(te.turn_entropies.iter().all(|s| s.abs() < 1e-10));
        assert!((te.total - te.mixing).abs() < 1e-10);
        assert_eq!(te.turns.len(), 7);
        assert!(te.mixing <= (te.turns.len() as f64).log2());
    }

    #[test]
    fn distant_turns_can_share_the_lower_half() {
        // end of the upward climb in round 0 and the downward flag at the
        // same row in round 1 leave identical rows below the cut
        let (a, b) = (
            legal_shape(7, 4, 3).unwrap(),
            legal_shape(14, 4, 3).unwrap(),
        );
        let top = 2 * 4;
        assert_eq!(a.cells()[top..], b.cells()[top..]);
        assert_ne!(a.cells()[..top], b.cells()[..top]);
        let h = GridHistoryState::new(GridCircuit::new(&empty(4), 3).unwrap()).unwrap();
        let ts = turns(2, 4, 3).unwrap();
        let (p2, p4) = (h.turn_weights(&ts[1]), h.turn_weights(&ts[3]));
        assert!(!h.cutwise_orthogonal(&p2, &p4, 2).unwrap());
        let adjacent = (h.turn_weights(&ts[0]), h.turn_weights(&ts[1]));
        assert!(h.cutwise_orthogonal(&adjacent.0, &adjacent.1, 2).unwrap());
    }

    #[test]
    fn structured_entropy_matches_dense_reshape() {
        let base = normalize_rounds(&random_circuit(2, 3, Seed::from_u64(21)).unwrap()).unwrap();
        let base = CircuitIR::new(2, base.gates()[..2].to_vec()).unwrap();
        let h = GridHistoryState::new(GridCircuit::new(&base, 2).unwrap()).unwrap();
        let v = h.to_dense().unwrap();
        let da = 9usize.pow((h.circuit().cols() + 1) as u32);
        let m = DMatrix::from_row_slice(da, v.len() / da, &v);
        let dense = entropy_from_singular_values(m.singular_values().iter().copied());
        assert!((dense - h.entropy_direct(1).unwrap()).abs() < 1e-9);
    }
}
