//! Sparse Hermitian operators in canonical triplet form.

use std::fmt::Write as _;

use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::scalar::{Real, Scalar};

/// Collects `(row, col, value)` contributions; duplicates are summed on build.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder<T> {
    dim: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(dim: usize) -> Self {
        TripletBuilder {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&mut self, row: usize, col: usize, v: T) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row, col, v));
    }

    /// Adds `v·|row⟩⟨col| + conj(v)·|col⟩⟨row|` (once on the diagonal).
    pub fn add_hermitian_pair(&mut self, row: usize, col: usize, v: T) {
        if row == col {
            self.add(row, row, T::from_real(v.re()));
        } else {
            self.add(row, col, v);
            self.add(col, row, v.conj());
        }
    }

    pub fn extend(&mut self, other: TripletBuilder<T>) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries.extend(other.entries);
    }

    pub fn build(self) -> Result<SparseOperator<T>> {
        SparseOperator::from_triplets(self.dim, self.entries)
    }
}

/// Row-compressed operator. Entries are sorted by `(row, col)`, unique and nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseOperator<T> {
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::OutOfRange {
                index: r.max(c),
                max: dim.saturating_sub(1),
            });
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows_of.into_iter().zip(cols).zip(vals) {
            if v != T::zero() {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseOperator {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        })
    }

    pub fn diagonal(values: &[T]) -> Result<Self> {
        Self::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Canonical `(row, col, value)` listing.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => T::zero(),
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        self.apply(x, &mut y);
        y
    }

    /// `⟨x|H|x⟩`.
    pub fn expectation(&self, x: &[T]) -> T {
        let hx = self.matvec(x);
        x.iter().zip(&hx).map(|(&a, &b)| a.conj() * b).sum()
    }

    /// Largest `|H_rc − conj(H_cr)|`.
    pub fn hermitian_defect(&self) -> T::Real {
        let mut worst = T::Real::zero();
        for (r, c, v) in self.triplets() {
            let d = (v - self.get(c, r).conj()).modulus();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T::Real) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, T::one())
    }

    /// `self + a·other`.
    pub fn combine(&self, other: &Self, a: T) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid(format!(
                "adding {}- and {}-dimensional operators",
                self.dim, other.dim
            )));
        }
        let mut e: Vec<_> = self.triplets().collect();
        e.extend(other.triplets().map(|(r, c, v)| (r, c, a * v)));
        Self::from_triplets(self.dim, e)
    }

    pub fn scale(&self, a: T) -> Self {
        Self::from_triplets(
            self.dim,
            self.triplets().map(|(r, c, v)| (r, c, a * v)).collect(),
        )
        .expect("indices already valid")
    }

    /// Gershgorin interval containing the spectrum of a Hermitian operator.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut centre = 0.0;
            let mut radius = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    centre = v.re().as_f64();
                } else {
                    radius += v.modulus().as_f64();
                }
            }
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Text export: a `dim nnz` header, then one `row col re im` line per entry.
    pub fn to_triplet_text(&self) -> String {
        let mut s = format!("{} {}\n", self.dim, self.nnz());
        for (r, c, v) in self.triplets() {
            writeln!(s, "{r} {c} {} {}", v.re().as_f64(), v.im().as_f64())
                .expect("write to String");
        }
        s
    }

    pub fn from_triplet_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Decode("empty operator file".into()))?;
        let mut h = header.split_whitespace();
        let mut num = |what: &str| -> Result<usize> {
            h.next()
                .ok_or_else(|| Error::Decode(format!("header lacks {what}")))?
                .parse()
                .map_err(|e| Error::Decode(format!("{what}: {e}")))
        };
        let dim = num("dim")?;
        let nnz = num("nnz")?;
        let mut entries = Vec::with_capacity(nnz);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Decode(format!("bad triplet line {line:?}")));
            }
            let parse_u = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Decode(format!("{s:?}: {e}")))
            };
            let parse_f = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Decode(format!("{s:?}: {e}")))
            };
            let re = T::Real::lit(parse_f(f[2])?);
            let im = T::Real::lit(parse_f(f[3])?);
            let v = T::from_parts(re, im)
                .ok_or_else(|| Error::Decode("complex entry in a real operator".into()))?;
            entries.push((parse_u(f[0])?, parse_u(f[1])?, v));
        }
        if entries.len() != nnz {
            return Err(Error::Decode(format!(
                "header says {nnz} entries, found {}",
                entries.len()
            )));
        }
        Self::from_triplets(dim, entries)
    }

    /// Dense row-major copy, for small cross-checks.
    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            d[r * self.dim + c] = v;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    type C = Complex<f64>;

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let op = SparseOperator::from_triplets(
            3,
            vec![
                (1, 1, 2.0),
                (0, 2, 1.0),
                (1, 1, -2.0),
                (0, 2, 0.5),
                (2, 0, 1.5),
            ],
        )
        .unwrap();
        assert_eq!(
            op.triplets().collect::<Vec<_>>(),
            vec![(0, 2, 1.5), (2, 0, 1.5)]
        );
        assert!(op.is_hermitian(0.0));
        assert!(SparseOperator::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn hermitian_pairs() {
        let mut b = TripletBuilder::<C>::new(2);
        b.add_hermitian_pair(0, 1, C::new(0.0, 1.0));
        let op = b.build().unwrap();
        assert_eq!(op.get(1, 0), C::new(0.0, -1.0));
        assert!(op.is_hermitian(0.0));
        let bad = SparseOperator::from_triplets(
            2,
            vec![(0, 1, C::new(0.0, 1.0)), (1, 0, C::new(0.0, 1.0))],
        )
        .unwrap();
        assert!(!bad.is_hermitian(1e-12));
    }

    #[test]
    fn matvec_and_expectation() {
        let x = SparseOperator::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(x.matvec(&[1.0, 2.0]), vec![2.0, 1.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x.expectation(&[h, h]) - 1.0).abs() < 1e-15);
        assert_eq!(x.gershgorin(), (-1.0, 1.0));
    }

    #[test]
    fn text_round_trip() {
        let mut b = TripletBuilder::<C>::new(3);
        b.add_hermitian_pair(0, 2, C::new(0.25, -1.0 / 3.0));
        b.add(1, 1, C::new(1e-300, 0.0));
        let op = b.build().unwrap();
        let text = op.to_triplet_text();
        assert!(text.starts_with("3 3\n"));
        assert_eq!(SparseOperator::<C>::from_triplet_text(&text).unwrap(), op);
        assert!(SparseOperator::<C>::from_triplet_text("3 4\n0 0 1 0\n").is_err());
        assert!(SparseOperator::<f64>::from_triplet_text("1 1\n0 0 1 2\n").is_err());
    }

    #[test]
    fn combine_and_scale() {
        let a = SparseOperator::diagonal(&[1.0, 2.0]).unwrap();
        let b = SparseOperator::diagonal(&[1.0, -2.0]).unwrap();
        assert_eq!(
            a.add(&b).unwrap().triplets().collect::<Vec<_>>(),
            vec![(0, 0, 2.0)]
        );
        assert_eq!(a.scale(0.0).nnz(), 0);
        assert_eq!(a.scale(2.0).get(1, 1), 4.0);
    }
}
