//! Matrices over Z_q and the uniform / discretized-Gaussian / lossy samplers.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{budget, invalid, Error, Result};
use crate::seed::Seed;

/// Largest number of columns [`binary_kernel_count`] will enumerate.
pub const KERNEL_BUDGET_COLS: usize = 24;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    q: u64,
    entries: Vec<u64>,
}

#[inline]
fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % q as u128) as u64
}

#[inline]
fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

impl ZqMatrix {
    pub fn new(rows: usize, cols: usize, q: u64, entries: Vec<u64>) -> Result<Self> {
        if q < 2 {
            return Err(invalid(format!("modulus q={q} must be at least 2")));
        }
        if rows * cols != entries.len() {
            return Err(invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|&&e| e >= q) {
            return Err(invalid(format!("entry {e} not reduced mod {q}")));
        }
        Ok(ZqMatrix {
            rows,
            cols,
            q,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize, q: u64) -> Result<Self> {
        Self::new(rows, cols, q, vec![0; rows * cols])
    }

    pub fn identity(n: usize, q: u64) -> Result<Self> {
        let mut m = Self::zeros(n, n, q)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> ZqMatrix {
        let mut e = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                e.push(self.get(i, j));
            }
        }
        ZqMatrix {
            rows: self.cols,
            cols: self.rows,
            q: self.q,
            entries: e,
        }
    }

    fn check_same_modulus(&self, other: &ZqMatrix) -> Result<()> {
        if self.q != other.q {
            return Err(invalid(format!("moduli differ: {} vs {}", self.q, other.q)));
        }
        Ok(())
    }

    pub fn mul(&self, other: &ZqMatrix) -> Result<ZqMatrix> {
        self.check_same_modulus(other)?;
        if self.cols != other.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let q = self.q;
        let mut e = vec![0u64; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    e[idx] = add_mod(e[idx], mul_mod(a, other.get(k, j), q), q);
                }
            }
        }
        Ok(ZqMatrix {
            rows: self.rows,
            cols: other.cols,
            q,
            entries: e,
        })
    }

    pub fn add(&self, other: &ZqMatrix) -> Result<ZqMatrix> {
        self.zip_with(other, add_mod)
    }

    pub fn sub(&self, other: &ZqMatrix) -> Result<ZqMatrix> {
        self.zip_with(other, |a, b, q| add_mod(a, q - b, q))
    }

    fn zip_with(&self, other: &ZqMatrix, f: impl Fn(u64, u64, u64) -> u64) -> Result<ZqMatrix> {
        self.check_same_modulus(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(invalid("shape mismatch"));
        }
        let e = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| f(a, b, self.q))
            .collect();
        Ok(ZqMatrix {
            rows: self.rows,
            cols: self.cols,
            q: self.q,
            entries: e,
        })
    }

    /// `M·x mod q` for a binary vector given as a `cols`-bit integer whose
    /// most significant bit selects column 0.
    pub fn apply_binary(&self, x: u64) -> Vec<u64> {
        let mut out = vec![0u64; self.rows];
        for j in 0..self.cols {
            if (x >> (self.cols - 1 - j)) & 1 == 1 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = add_mod(*o, self.get(i, j), self.q);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// Bytes per serialized entry: enough to hold `q - 1`, at least one.
    pub fn entry_width(q: u64) -> usize {
        let bits = 64 - (q - 1).leading_zeros() as usize;
        bits.div_ceil(8).max(1)
    }

    /// Little-endian header `rows:u32, cols:u32, q:u64`, then each entry as a
    /// little-endian word of [`ZqMatrix::entry_width`] bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let w = Self::entry_width(self.q);
        let mut out = Vec::with_capacity(16 + w * self.entries.len());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        out.extend_from_slice(&self.q.to_le_bytes());
        for &e in &self.entries {
            out.extend_from_slice(&e.to_le_bytes()[..w]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ZqMatrix> {
        if bytes.len() < 16 {
            return Err(Error::Decode("matrix header truncated".into()));
        }
        let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let q = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        if q < 2 {
            return Err(Error::Decode(format!("bad modulus {q}")));
        }
        let w = Self::entry_width(q);
        let body = &bytes[16..];
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Decode("dimension overflow".into()))?;
        if body.len() != n * w {
            return Err(Error::Decode(format!(
                "expected {} entry bytes, found {}",
                n * w,
                body.len()
            )));
        }
        let entries = body
            .chunks(w)
            .map(|c| {
                let mut b = [0u8; 8];
                b[..w].copy_from_slice(c);
                u64::from_le_bytes(b)
            })
            .collect();
        ZqMatrix::new(rows, cols, q, entries).map_err(|e| Error::Decode(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    q: u64,
    sigma: f64,
}

impl GaussianParams {
    pub fn new(q: u64, sigma: f64) -> Result<Self> {
        if q < 2 {
            return Err(invalid(format!("modulus q={q} must be at least 2")));
        }
        if !(sigma > 0.0 && sigma < q as f64) {
            return Err(invalid(format!("sigma={sigma} must lie in (0, q)")));
        }
        Ok(GaussianParams { q, sigma })
    }

    /// Width `max(q / m^3, 1)`.
    pub fn default_sigma(q: u64, m: usize) -> f64 {
        (q as f64 / (m as f64).powi(3)).max(1.0)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Matrices that produced a lossy sample. Never part of a public key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossyWitness {
    pub b: ZqMatrix,
    pub c: ZqMatrix,
    pub e: ZqMatrix,
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!("zero dimension {rows}x{cols}")));
    }
    Ok(())
}

pub fn sample_uniform(rows: usize, cols: usize, q: u64, seed: &Seed) -> Result<ZqMatrix> {
    sample_uniform_with(rows, cols, q, &mut seed.rng())
}

pub fn sample_uniform_with<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    q: u64,
    rng: &mut R,
) -> Result<ZqMatrix> {
    check_dims(rows, cols)?;
    if q < 2 {
        return Err(invalid(format!("modulus q={q} must be at least 2")));
    }
    let entries = (0..rows * cols).map(|_| rng.random_range(0..q)).collect();
    ZqMatrix::new(rows, cols, q, entries)
}

/// Lifts a residue to the centered range `(-q/2, q/2]`.
pub fn centered(x: u64, q: u64) -> i128 {
    if x > q / 2 {
        x as i128 - q as i128
    } else {
        x as i128
    }
}

/// One entry `round(g) mod q` with `g ~ N(0, sigma)`.
pub fn gaussian_residue<R: Rng + ?Sized>(params: &GaussianParams, rng: &mut R) -> u64 {
    let normal = Normal::new(0.0, params.sigma).expect("validated sigma");
    let g = normal.sample(rng).round() as i128;
    g.rem_euclid(params.q as i128) as u64
}

pub fn sample_gaussian(
    rows: usize,
    cols: usize,
    params: &GaussianParams,
    seed: &Seed,
) -> Result<ZqMatrix> {
    sample_gaussian_with(rows, cols, params, &mut seed.rng())
}

pub fn sample_gaussian_with<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    params: &GaussianParams,
    rng: &mut R,
) -> Result<ZqMatrix> {
    check_dims(rows, cols)?;
    let entries = (0..rows * cols)
        .map(|_| gaussian_residue(params, rng))
        .collect();
    ZqMatrix::new(rows, cols, params.q, entries)
}

/// `A = Bᵀ·C + E mod q` with `B, C` uniform `ell × m` and `E` Gaussian `m × m`.
pub fn sample_lossy(
    m: usize,
    ell: usize,
    params: &GaussianParams,
    seed: &Seed,
) -> Result<(ZqMatrix, LossyWitness)> {
    sample_lossy_with(m, ell, params, &mut seed.rng())
}

pub fn sample_lossy_with<R: Rng + ?Sized>(
    m: usize,
    ell: usize,
    params: &GaussianParams,
    rng: &mut R,
) -> Result<(ZqMatrix, LossyWitness)> {
    if ell < 1 || ell > m {
        return Err(invalid(format!("need 1 <= ell <= m, got ell={ell}, m={m}")));
    }
    let q = params.q;
    let b = sample_uniform_with(ell, m, q, rng)?;
    let c = sample_uniform_with(ell, m, q, rng)?;
    let e = sample_gaussian_with(m, m, params, rng)?;
    let a = b.transpose().mul(&c)?.add(&e)?;
    Ok((a, LossyWitness { b, c, e }))
}

/// Index of the width-`q/p` bin containing `x`, i.e. `floor(x·p/q)`.
pub fn round_p(x: u64, q: u64, p: u64) -> Result<u64> {
    if p == 0 || !q.is_multiple_of(p) {
        return Err(invalid(format!("p={p} must divide q={q}")));
    }
    if x >= q {
        return Err(invalid(format!("x={x} not reduced mod {q}")));
    }
    Ok(x / (q / p))
}

/// Number of `x ∈ {0,1}^cols` with `M·x = 0`, by Gray-code enumeration.
pub fn binary_kernel_count(m: &ZqMatrix) -> Result<u64> {
    budget(
        "binary kernel scan (columns)",
        m.cols as u128,
        KERNEL_BUDGET_COLS as u128,
    )?;
    let q = m.q;
    let cols: Vec<Vec<u64>> = (0..m.cols).map(|j| m.column(j)).collect();
    let mut acc = vec![0u64; m.rows];
    let mut nonzero = 0usize;
    let mut count = 1u64; // x = 0
    let mut gray = 0u64;
    for step in 1u64..(1u64 << m.cols) {
        let j = step.trailing_zeros() as usize;
        let adding = (gray >> j) & 1 == 0;
        gray ^= 1 << j;
        for (a, &c) in acc.iter_mut().zip(&cols[j]) {
            let was = *a != 0;
            *a = if adding {
                add_mod(*a, c, q)
            } else {
                add_mod(*a, q - c, q)
            };
            match (was, *a != 0) {
                (false, true) => nonzero += 1,
                (true, false) => nonzero -= 1,
                _ => {}
            }
        }
        if nonzero == 0 {
            count += 1;
        }
    }
    Ok(count)
}

fn two_adic_exponent(q: u64) -> Result<u32> {
    if !q.is_power_of_two() || q < 2 {
        return Err(invalid(format!(
            "Howell form implemented for q = 2^k, got {q}"
        )));
    }
    Ok(q.trailing_zeros())
}

fn inverse_odd(u: u64, q: u64) -> u64 {
    let mut x = u;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(u.wrapping_mul(x)));
    }
    x & (q - 1)
}

/// Row-reduced Howell form over `Z_{2^k}`: each row has a leading entry
/// `2^v` (normalized), entries above a pivot are reduced below it, and the
/// row set is closed under the annihilator multiples that a nonfield pivot
/// produces. Zero rows are dropped.
pub fn howell_form(m: &ZqMatrix) -> Result<ZqMatrix> {
    let (rows, _) = howell_rows(m)?;
    let entries = rows.iter().flat_map(|r| r.iter().copied()).collect();
    ZqMatrix::new(rows.len(), m.cols, m.q, entries)
}

fn howell_rows(m: &ZqMatrix) -> Result<(Vec<Vec<u64>>, Vec<u32>)> {
    let k = two_adic_exponent(m.q)?;
    let q = m.q;
    let mask = q - 1;
    let mut pool: Vec<Vec<u64>> = (0..m.rows).map(|i| m.row(i).to_vec()).collect();
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut vals: Vec<u32> = Vec::new();
    let axpy = |dst: &mut [u64], c: u64, src: &[u64]| {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = d.wrapping_sub(c.wrapping_mul(s)) & mask;
        }
    };
    for j in 0..m.cols {
        let best = pool
            .iter()
            .enumerate()
            .filter(|(_, r)| r[j] != 0)
            .min_by_key(|(_, r)| r[j].trailing_zeros())
            .map(|(i, _)| i);
        let Some(bi) = best else { continue };
        let mut p = pool.swap_remove(bi);
        let v = p[j].trailing_zeros();
        let unit = p[j] >> v;
        let inv = inverse_odd(unit, q);
        for e in p.iter_mut() {
            *e = e.wrapping_mul(inv) & mask;
        }
        for r in pool.iter_mut() {
            if r[j] != 0 {
                let c = r[j] >> v;
                axpy(r, c, &p);
            }
        }
        for o in out.iter_mut() {
            let c = o[j] >> v;
            if c != 0 {
                axpy(o, c, &p);
            }
        }
        let ann: Vec<u64> = p
            .iter()
            .map(|&e| e.wrapping_mul(1u64 << (k - v)) & mask)
            .collect();
        if ann.iter().any(|&e| e != 0) {
            pool.push(ann);
        }
        pool.retain(|r| r.iter().any(|&e| e != 0));
        out.push(p);
        vals.push(v);
    }
    Ok((out, vals))
}

/// `log2 |row span|` of a matrix over `Z_{2^k}`.
pub fn row_span_log2(m: &ZqMatrix) -> Result<u32> {
    let k = two_adic_exponent(m.q)?;
    let (_, vals) = howell_rows(m)?;
    Ok(vals.iter().map(|v| k - v).sum())
}

/// True iff the rows of `m` are linearly independent over `Z_{2^k}`,
/// i.e. the row span has `q^rows` elements.
pub fn has_full_row_rank(m: &ZqMatrix) -> Result<bool> {
    let k = two_adic_exponent(m.q)?;
    Ok(row_span_log2(m)? == k * m.rows as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    struct ZeroStream;
    impl RngCore for ZeroStream {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0)
        }
    }

    #[test]
    fn uniform_rejects_bad_params() {
        assert!(sample_uniform(2, 2, 1, &Seed::from_u64(0)).is_err());
        assert!(sample_uniform(0, 2, 4, &Seed::from_u64(0)).is_err());
    }

    #[test]
    fn zero_stream_gives_zero_matrix() {
        let m = sample_uniform_with(2, 2, 2, &mut ZeroStream).unwrap();
        assert!(m.is_zero());
    }

    #[test]
    fn tiny_sigma_gives_zero_matrix() {
        let p = GaussianParams::new(1 << 16, 1e-9).unwrap();
        assert!(sample_gaussian(5, 7, &p, &Seed::from_u64(3))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn gaussian_params_validation() {
        assert!(GaussianParams::new(16, 0.0).is_err());
        assert!(GaussianParams::new(16, 16.0).is_err());
        assert_eq!(GaussianParams::default_sigma(256, 8), 1.0);
        assert_eq!(GaussianParams::default_sigma(1 << 16, 16), 16.0);
    }

    #[test]
    fn lossy_shape_and_witness() {
        let p = GaussianParams::new(1 << 16, 16.0).unwrap();
        let (a, w) = sample_lossy(16, 3, &p, &Seed::from_u64(9)).unwrap();
        assert_eq!((a.rows(), a.cols(), a.modulus()), (16, 16, 1 << 16));
        assert_eq!((w.b.rows(), w.b.cols()), (3, 16));
        let rebuilt = w.b.transpose().mul(&w.c).unwrap().add(&w.e).unwrap();
        assert_eq!(rebuilt, a);
        assert!(sample_lossy(4, 5, &p, &Seed::from_u64(9)).is_err());
        assert!(sample_lossy(4, 0, &p, &Seed::from_u64(9)).is_err());
    }

    #[test]
    fn lossy_without_noise_is_exact_product() {
        let p = GaussianParams::new(64, 1e-9).unwrap();
        let (a, w) = sample_lossy(6, 6, &p, &Seed::from_u64(1)).unwrap();
        assert_eq!(a, w.b.transpose().mul(&w.c).unwrap());
    }

    #[test]
    fn round_p_examples() {
        assert_eq!(round_p(7, 16, 16).unwrap(), 7);
        assert_eq!(round_p(0, 32, 16).unwrap(), 0);
        assert_eq!(round_p(1, 32, 16).unwrap(), 0);
        assert_eq!(round_p(2, 32, 16).unwrap(), 1);
        assert_eq!(round_p(31, 32, 16).unwrap(), 15);
        assert!(round_p(3, 24, 16).is_err());
        assert!(round_p(32, 32, 16).is_err());
    }

    #[test]
    fn kernel_count_examples() {
        assert_eq!(
            binary_kernel_count(&ZqMatrix::zeros(2, 3, 4).unwrap()).unwrap(),
            8
        );
        assert_eq!(
            binary_kernel_count(&ZqMatrix::identity(3, 4).unwrap()).unwrap(),
            1
        );
        let wide = ZqMatrix::zeros(1, 25, 4).unwrap();
        assert!(matches!(
            binary_kernel_count(&wide),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn kernel_count_matches_direct_scan() {
        let m = sample_uniform(2, 10, 4, &Seed::from_u64(5)).unwrap();
        let direct = (0..1u64 << 10)
            .filter(|&x| m.apply_binary(x).iter().all(|&v| v == 0))
            .count() as u64;
        assert_eq!(binary_kernel_count(&m).unwrap(), direct);
    }

    fn brute_span_log2(m: &ZqMatrix) -> u32 {
        let q = m.modulus();
        let mut seen = std::collections::HashSet::new();
        let total = q.pow(m.rows() as u32);
        for code in 0..total {
            let mut c = code;
            let mut acc = vec![0u64; m.cols()];
            for i in 0..m.rows() {
                let coef = c % q;
                c /= q;
                for (j, a) in acc.iter_mut().enumerate() {
                    *a = (*a + coef * m.get(i, j)) % q;
                }
            }
            seen.insert(acc);
        }
        (seen.len() as f64).log2().round() as u32
    }

    #[test]
    fn howell_span_matches_enumeration() {
        for s in 0..40 {
            let q = if s % 2 == 0 { 4 } else { 8 };
            let m = sample_uniform(3, 3, q, &Seed::from_u64(100 + s)).unwrap();
            assert_eq!(row_span_log2(&m).unwrap(), brute_span_log2(&m), "seed {s}");
        }
        let two = ZqMatrix::new(2, 2, 4, vec![2, 0, 0, 2]).unwrap();
        assert_eq!(row_span_log2(&two).unwrap(), 2);
        assert!(!has_full_row_rank(&two).unwrap());
        assert!(has_full_row_rank(&ZqMatrix::identity(3, 8).unwrap()).unwrap());
        assert!(howell_form(&ZqMatrix::zeros(2, 2, 6).unwrap()).is_err());
    }

    #[test]
    fn serialization_widths() {
        let m = ZqMatrix::new(1, 2, 1 << 16, vec![1, 65535]).unwrap();
        let b = m.to_bytes();
        assert_eq!(b.len(), 16 + 4);
        assert_eq!(&b[16..], &[1, 0, 255, 255]);
        assert_eq!(ZqMatrix::from_bytes(&b).unwrap(), m);
        assert!(ZqMatrix::from_bytes(&b[..b.len() - 1]).is_err());
        assert_eq!(ZqMatrix::entry_width(1 << 24), 3);
        assert_eq!(ZqMatrix::entry_width(2), 1);
    }
}
