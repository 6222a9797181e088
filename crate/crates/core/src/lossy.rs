//! Keyed functions `f(x) = h(round_p(A·x mod q))` on m-bit inputs, sampled in
//! an injective mode (uniform `A`) or a lossy mode (`A = BᵀC + E`).

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{budget, invalid, Error, Result};
use crate::hash::{sample_rwise, sample_rwise_with, RWiseKey};
use crate::seed::Seed;
use crate::zq::{sample_lossy, sample_uniform, GaussianParams, LossyWitness, ZqMatrix};

pub const DEFAULT_P: u64 = 16;
/// Largest input length the exhaustive scans accept.
pub const SCAN_BUDGET_BITS: usize = 24;
pub const KEY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Injective,
    Lossy,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Injective => "injective",
            Mode::Lossy => "lossy",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "injective" => Ok(Mode::Injective),
            "lossy" => Ok(Mode::Lossy),
            other => Err(invalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyOverrides {
    pub p: Option<u64>,
    pub q: Option<u64>,
    pub sigma: Option<f64>,
}

/// Sampling facts that stay out of the public key.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub mode: Mode,
    pub sigma: f64,
    pub witness: Option<LossyWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionKey {
    m: usize,
    ell: usize,
    p: u64,
    q: u64,
    a: ZqMatrix,
    hash: RWiseKey,
    /// Bits per rounded coordinate, `log2 p`.
    digit_bits: u32,
    /// `A` column-major for incremental evaluation.
    columns: Vec<Vec<u64>>,
}

impl FunctionKey {
    pub fn new(ell: usize, p: u64, a: ZqMatrix, hash: RWiseKey) -> Result<Self> {
        let m = a.rows();
        let q = a.modulus();
        if a.cols() != m || m == 0 {
            return Err(invalid(format!(
                "A must be square and nonempty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if m > 64 {
            return Err(invalid(format!("m={m} exceeds 64-bit inputs")));
        }
        if ell == 0 || ell > m {
            return Err(invalid(format!("need 1 <= ell <= m, got ell={ell}")));
        }
        if !p.is_power_of_two() || p < 2 || !q.is_multiple_of(p) {
            return Err(invalid(format!(
                "p={p} must be a power of two dividing q={q}"
            )));
        }
        let digit_bits = p.trailing_zeros();
        let in_bits = digit_bits * m as u32;
        if hash.in_bits() != in_bits || hash.out_bits() != m as u32 {
            return Err(invalid(format!(
                "hash must map {in_bits} bits to {m}, has {} -> {}",
                hash.in_bits(),
                hash.out_bits()
            )));
        }
        let columns = (0..m).map(|j| a.column(j)).collect();
        Ok(FunctionKey {
            m,
            ell,
            p,
            q,
            a,
            hash,
            digit_bits,
            columns,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn matrix(&self) -> &ZqMatrix {
        &self.a
    }

    pub fn hash(&self) -> &RWiseKey {
        &self.hash
    }

    /// Same matrix, different hash key.
    pub fn with_hash(&self, hash: RWiseKey) -> Result<Self> {
        Self::new(self.ell, self.p, self.a.clone(), hash)
    }

    /// Packs rounded coordinates into the hash domain, coordinate 1 leftmost.
    #[inline]
    fn pack(&self, ax: &[u64]) -> u128 {
        let width = self.q / self.p;
        ax.iter().fold(0u128, |acc, &v| {
            (acc << self.digit_bits) | (v / width) as u128
        })
    }

    /// `round_p(A·x)` packed as an `m·log2(p)`-bit value.
    pub fn rounded_raw(&self, x: u64) -> u128 {
        let mut acc = vec![0u64; self.m];
        for j in 0..self.m {
            if (x >> (self.m - 1 - j)) & 1 == 1 {
                for (a, &c) in acc.iter_mut().zip(&self.columns[j]) {
                    *a = ((*a as u128 + c as u128) % self.q as u128) as u64;
                }
            }
        }
        self.pack(&acc)
    }

    #[inline]
    pub fn eval_raw(&self, x: u64) -> u64 {
        self.hash.eval_raw(self.rounded_raw(x)) as u64
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        x.expect_len(self.m)?;
        BitString::new(self.eval_raw(x.value() as u64) as u128, self.m)
    }

    /// Visits `(x, round_p(A·x))` for every `x ∈ {0,1}^m` in Gray-code order.
    pub fn for_each_rounded(&self, mut visit: impl FnMut(u64, u128)) -> Result<()> {
        budget(
            "exhaustive scan (input bits)",
            self.m as u128,
            SCAN_BUDGET_BITS as u128,
        )?;
        let q = self.q;
        let mut acc = vec![0u64; self.m];
        let mut x = 0u64;
        visit(0, self.pack(&acc));
        for step in 1u64..(1u64 << self.m) {
            let bit = step.trailing_zeros() as usize;
            // bit position counted from the right maps to column m-1-bit
            let col = &self.columns[self.m - 1 - bit];
            let adding = (x >> bit) & 1 == 0;
            x ^= 1 << bit;
            for (a, &c) in acc.iter_mut().zip(col) {
                *a = if adding {
                    ((*a as u128 + c as u128) % q as u128) as u64
                } else {
                    ((*a as u128 + (q - c) as u128) % q as u128) as u64
                };
            }
            visit(x, self.pack(&acc));
        }
        Ok(())
    }

    /// Full truth table indexed by input value.
    pub fn truth_table(&self) -> Result<Vec<u64>> {
        let mut t = vec![0u64; 1usize << self.m];
        self.for_each_rounded(|x, z| t[x as usize] = self.hash.eval_raw(z) as u64)?;
        Ok(t)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(KeyFile::from(self)).expect("plain data serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let f: KeyFile =
            serde_json::from_value(v.clone()).map_err(|e| Error::Decode(e.to_string()))?;
        f.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct HashFile {
    r: usize,
    in_bits: u32,
    out_bits: u32,
    coeffs: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyFile {
    version: u32,
    m: usize,
    ell: usize,
    p: u64,
    q: u64,
    #[serde(rename = "A")]
    a: String,
    hash: HashFile,
}

impl From<&FunctionKey> for KeyFile {
    fn from(k: &FunctionKey) -> Self {
        KeyFile {
            version: KEY_FORMAT_VERSION,
            m: k.m,
            ell: k.ell,
            p: k.p,
            q: k.q,
            a: B64.encode(k.a.to_bytes()),
            hash: HashFile {
                r: k.hash.r(),
                in_bits: k.hash.in_bits(),
                out_bits: k.hash.out_bits(),
                coeffs: B64.encode(k.hash.coeff_bytes()),
            },
        }
    }
}

impl TryFrom<KeyFile> for FunctionKey {
    type Error = Error;
    fn try_from(f: KeyFile) -> Result<Self> {
        if f.version != KEY_FORMAT_VERSION {
            return Err(Error::Decode(format!(
                "unsupported key version {}",
                f.version
            )));
        }
        let bytes = |s: &str| B64.decode(s).map_err(|e| Error::Decode(e.to_string()));
        let a = ZqMatrix::from_bytes(&bytes(&f.a)?)?;
        let hash =
            RWiseKey::from_coeff_bytes(f.hash.in_bits, f.hash.out_bits, &bytes(&f.hash.coeffs)?)?;
        if hash.r() != f.hash.r {
            return Err(Error::Decode(format!(
                "hash r={} but {} coefficients",
                f.hash.r,
                hash.r()
            )));
        }
        let key =
            FunctionKey::new(f.ell, f.p, a, hash).map_err(|e| Error::Decode(e.to_string()))?;
        if key.m != f.m || key.q != f.q {
            return Err(Error::Decode("header (m, q) disagrees with matrix".into()));
        }
        Ok(key)
    }
}

pub fn sample_function_key(
    mode: Mode,
    m: usize,
    ell: usize,
    r: usize,
    seed: &Seed,
    overrides: &KeyOverrides,
) -> Result<(FunctionKey, Provenance)> {
    if ell > m {
        return Err(invalid(format!("ell={ell} exceeds m={m}")));
    }
    if r < 2 {
        return Err(invalid(format!("hash order r={r} must be at least 2")));
    }
    if m == 0 || m > 62 {
        return Err(invalid(format!("m={m} outside 1..=62")));
    }
    let q = overrides.q.unwrap_or(1u64 << m);
    // below m = 4 the default p would exceed q
    let p = overrides.p.unwrap_or(DEFAULT_P.min(q));
    let sigma = overrides
        .sigma
        .unwrap_or_else(|| GaussianParams::default_sigma(q, m));
    let params = GaussianParams::new(q, sigma)?;
    let (a, witness) = match mode {
        Mode::Injective => (sample_uniform(m, m, q, &seed.derive("matrix", 0))?, None),
        Mode::Lossy => {
            let (a, w) = sample_lossy(m, ell, &params, &seed.derive("matrix", 0))?;
            (a, Some(w))
        }
    };
    if !p.is_power_of_two() {
        return Err(invalid(format!("p={p} must be a power of two")));
    }
    let in_bits = p.trailing_zeros() * m as u32;
    let hash = sample_rwise(r, in_bits, m as u32, &seed.derive("hash", 0))?;
    let key = FunctionKey::new(ell, p, a, hash)?;
    Ok((
        key,
        Provenance {
            mode,
            sigma,
            witness,
        },
    ))
}

/// Exact `|img f|` by exhaustive evaluation.
pub fn image_size(key: &FunctionKey) -> Result<u64> {
    let mut seen = vec![0u64; (1usize << key.m).div_ceil(64)];
    let mut count = 0u64;
    key.for_each_rounded(|_, z| {
        let y = key.hash.eval_raw(z) as usize;
        let (w, b) = (y / 64, y % 64);
        if seen[w] >> b & 1 == 0 {
            seen[w] |= 1 << b;
            count += 1;
        }
    })?;
    Ok(count)
}

fn rounded_table(a: &ZqMatrix, p: u64) -> Result<Vec<u128>> {
    let m = a.rows();
    if !p.is_power_of_two() || !a.modulus().is_multiple_of(p) {
        return Err(invalid(format!(
            "p={p} must be a power of two dividing q={}",
            a.modulus()
        )));
    }
    budget(
        "exhaustive scan (input bits)",
        m as u128,
        SCAN_BUDGET_BITS as u128,
    )?;
    // the hash is irrelevant here; a constant one satisfies the key invariants
    let digit = p.trailing_zeros();
    let hash = RWiseKey::constant(digit * m as u32, m as u32, 0)?;
    let key = FunctionKey::new(1, p, a.clone(), hash)?;
    let mut t = vec![0u128; 1usize << m];
    key.for_each_rounded(|x, z| t[x as usize] = z)?;
    Ok(t)
}

/// True iff `x ↦ round_p(A·x)` is injective on `{0,1}^m`.
pub fn pre_rounding_injective(a: &ZqMatrix, p: u64) -> Result<bool> {
    let mut t = rounded_table(a, p)?;
    t.sort_unstable();
    Ok(t.windows(2).all(|w| w[0] != w[1]))
}

/// Fraction of fresh pairwise-independent hash keys under which `f(x) = f(y)`.
pub fn pairwise_collision_rate(
    a: &ZqMatrix,
    p: u64,
    x: u64,
    y: u64,
    trials: usize,
    seed: &Seed,
) -> Result<f64> {
    if x == y {
        return Err(invalid("collision rate needs x != y"));
    }
    let m = a.rows();
    if m > 64 || (m < 64 && (x >> m != 0 || y >> m != 0)) {
        return Err(invalid(format!("inputs must fit in {m} bits")));
    }
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let digit = p.trailing_zeros();
    let probe = FunctionKey::new(
        1,
        p,
        a.clone(),
        RWiseKey::constant(digit * m as u32, m as u32, 0)?,
    )?;
    let (zx, zy) = (probe.rounded_raw(x), probe.rounded_raw(y));
    if zx == zy {
        return Ok(1.0);
    }
    let mut rng = seed.rng();
    let mut hits = 0usize;
    for _ in 0..trials {
        let h = sample_rwise_with(2, digit * m as u32, m as u32, &mut rng)?;
        if h.eval_raw(zx) == h.eval_raw(zy) {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

/// Convenience for tests and the CLI: an injective-mode key with explicit hash order.
pub fn sample_hash_for(m: usize, p: u64, r: usize, seed: &Seed) -> Result<RWiseKey> {
    sample_rwise(r, p.trailing_zeros() * m as u32, m as u32, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(mode: Mode, m: usize, ell: usize, s: u64) -> (FunctionKey, Provenance) {
        sample_function_key(
            mode,
            m,
            ell,
            2,
            &Seed::from_u64(s),
            &KeyOverrides::default(),
        )
        .unwrap()
    }

    #[test]
    fn injective_defaults() {
        let (k, prov) = key(Mode::Injective, 8, 2, 1);
        assert_eq!((k.q(), k.p(), k.m()), (256, 16, 8));
        assert_eq!(k.hash().in_bits(), 32);
        assert_eq!(prov.sigma, 1.0);
        assert!(prov.witness.is_none());
    }

    #[test]
    fn lossy_witness_identity() {
        let (k, prov) = key(Mode::Lossy, 16, 3, 2);
        let w = prov.witness.unwrap();
        assert_eq!(
            &w.b.transpose().mul(&w.c).unwrap().add(&w.e).unwrap(),
            k.matrix()
        );
        assert_eq!(prov.sigma, 16.0);
    }

    #[test]
    fn small_m_caps_p_at_q() {
        let (k, _) = key(Mode::Injective, 3, 1, 1);
        assert_eq!((k.q(), k.p()), (8, 8));
    }

    #[test]
    fn same_seed_same_key() {
        assert_eq!(key(Mode::Lossy, 10, 3, 5).0, key(Mode::Lossy, 10, 3, 5).0);
        assert_ne!(key(Mode::Lossy, 10, 3, 5).0, key(Mode::Lossy, 10, 3, 6).0);
    }

    #[test]
    fn bad_parameters() {
        let s = Seed::from_u64(0);
        let d = KeyOverrides::default();
        assert!(sample_function_key(Mode::Lossy, 4, 5, 2, &s, &d).is_err());
        assert!(sample_function_key(Mode::Lossy, 4, 2, 1, &s, &d).is_err());
        let bad_p = KeyOverrides { p: Some(3), ..d };
        assert!(sample_function_key(Mode::Injective, 4, 2, 2, &s, &bad_p).is_err());
    }

    #[test]
    fn zero_input_maps_to_hash_of_zero() {
        let (k, _) = key(Mode::Injective, 12, 2, 3);
        assert_eq!(k.eval_raw(0), k.hash().eval_raw(0) as u64);
    }

    #[test]
    fn constant_hash_has_unit_image() {
        let (k, _) = key(Mode::Injective, 10, 2, 4);
        let c = k
            .with_hash(RWiseKey::constant(40, 10, 0x155).unwrap())
            .unwrap();
        assert_eq!(image_size(&c).unwrap(), 1);
    }

    #[test]
    fn scan_budget() {
        let a = ZqMatrix::zeros(25, 25, 1 << 25).unwrap();
        assert!(matches!(
            pre_rounding_injective(&a, 16),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn injectivity_examples() {
        assert!(!pre_rounding_injective(&ZqMatrix::zeros(6, 6, 64).unwrap(), 16).unwrap());
        assert!(pre_rounding_injective(&ZqMatrix::identity(2, 4).unwrap(), 4).unwrap());
    }

    #[test]
    fn collision_rate_edge_cases() {
        let z = ZqMatrix::zeros(12, 12, 1 << 12).unwrap();
        assert!(pairwise_collision_rate(&z, 16, 3, 3, 10, &Seed::from_u64(0)).is_err());
        assert_eq!(
            pairwise_collision_rate(&z, 16, 1, 2, 10, &Seed::from_u64(0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn json_round_trip_omits_provenance() {
        let (k, _) = key(Mode::Lossy, 9, 3, 8);
        let v = k.to_json();
        let obj = v.as_object().unwrap();
        let mut fields: Vec<_> = obj.keys().cloned().collect();
        fields.sort();
        assert_eq!(fields, ["A", "ell", "hash", "m", "p", "q", "version"]);
        assert_eq!(FunctionKey::from_json(&v).unwrap(), k);
    }
}
