//! Phase-function keys: the single-cut and multi-cut labelling maps, the phase
//! bit `s(x) = h_fin(label(x))`, and dense statevector synthesis.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bits::{mask, BitString};
use crate::error::{budget, invalid, Error, Result};
use crate::hash::{sample_rwise, RWiseKey};
use crate::lossy::{sample_function_key, FunctionKey, KeyOverrides, Mode, Provenance};
use crate::seed::Seed;
use crate::state::{PhaseState, MAX_DENSE_QUBITS};

/// Independence order of the final phase hash.
pub const FIN_ORDER: usize = 4;
/// Independence order of every labelling hash.
pub const REP_ORDER: usize = 2;
pub const PHASE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntanglementMode {
    /// Lossy labelling keys.
    Low,
    /// Injective labelling keys.
    High,
}

impl EntanglementMode {
    pub fn function_mode(self) -> Mode {
        match self {
            EntanglementMode::Low => Mode::Lossy,
            EntanglementMode::High => Mode::Injective,
        }
    }
}

impl fmt::Display for EntanglementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntanglementMode::Low => "low",
            EntanglementMode::High => "high",
        })
    }
}

impl FromStr for EntanglementMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(EntanglementMode::Low),
            "high" => Ok(EntanglementMode::High),
            other => Err(invalid(format!("unknown entanglement mode {other:?}"))),
        }
    }
}

/// `ceil(√f)`, the lossiness used for every labelling key.
pub fn ell_for(f: usize) -> usize {
    let mut l = (f as f64).sqrt().floor() as usize;
    while l * l < f {
        l += 1;
    }
    l.max(1)
}

/// Anything that assigns a phase bit to each n-bit string.
pub trait PhaseKey {
    fn n(&self) -> usize;

    /// Label of `x`, as a raw `n`-bit value.
    fn label_raw(&self, x: u64) -> u64;

    fn fin(&self) -> &RWiseKey;

    fn phase_raw(&self, x: u64) -> bool {
        self.fin().eval_raw(self.label_raw(x) as u128) & 1 == 1
    }

    /// Labels of all `2^n` inputs.
    fn label_table(&self) -> Result<Vec<u64>> {
        budget(
            "phase truth table (qubits)",
            self.n() as u128,
            MAX_DENSE_QUBITS as u128,
        )?;
        Ok((0..1u64 << self.n()).map(|x| self.label_raw(x)).collect())
    }

    fn phase_table(&self) -> Result<Vec<bool>> {
        Ok(self
            .label_table()?
            .into_iter()
            .map(|y| self.fin().eval_raw(y as u128) & 1 == 1)
            .collect())
    }
}

fn check_fin(fin: &RWiseKey, n: usize) -> Result<()> {
    if fin.in_bits() as usize != n || fin.out_bits() != 1 {
        return Err(invalid(format!(
            "fin key must map {n} bits to 1, has {} -> {}",
            fin.in_bits(),
            fin.out_bits()
        )));
    }
    Ok(())
}

/// Applies `f` to the leftmost `m` of `n` bits of `y`, keeping the rest.
#[inline]
fn step(f: &FunctionKey, y: u64, n: usize) -> u64 {
    let m = f.m();
    let low = n - m;
    let head = y >> low;
    (f.eval_raw(head) << low) | (y & mask(low) as u64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleCutKey {
    n: usize,
    rep: FunctionKey,
    fin: RWiseKey,
}

impl SingleCutKey {
    pub fn new(rep: FunctionKey, fin: RWiseKey) -> Result<Self> {
        let n = 2 * rep.m();
        check_fin(&fin, n)?;
        Ok(SingleCutKey { n, rep, fin })
    }

    pub fn rep(&self) -> &FunctionKey {
        &self.rep
    }

    pub fn label(&self, x: &BitString) -> Result<BitString> {
        x.expect_len(self.n)?;
        BitString::new(self.label_raw(x.value() as u64) as u128, self.n)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": PHASE_FORMAT_VERSION,
            "n": self.n,
            "rep": self.rep.to_json(),
            "fin": fin_json(&self.fin),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        check_version(v)?;
        let rep = FunctionKey::from_json(field(v, "rep")?)?;
        let fin = fin_from_json(field(v, "fin")?)?;
        let key = Self::new(rep, fin)?;
        if field(v, "n")?.as_u64() != Some(key.n as u64) {
            return Err(Error::Decode("n disagrees with rep.m".into()));
        }
        Ok(key)
    }
}

impl PhaseKey for SingleCutKey {
    fn n(&self) -> usize {
        self.n
    }

    fn label_raw(&self, x: u64) -> u64 {
        step(&self.rep, x, self.n)
    }

    fn fin(&self) -> &RWiseKey {
        &self.fin
    }
}

pub fn sample_single_cut_key(
    mode: EntanglementMode,
    n: usize,
    f: usize,
    seed: &Seed,
) -> Result<(SingleCutKey, Provenance)> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(invalid(format!(
            "single-cut construction needs even n, got {n}"
        )));
    }
    if f == 0 || f >= n / 2 {
        return Err(invalid(format!("need 0 < f < n/2, got f={f}, n={n}")));
    }
    let m = n / 2;
    let (rep, prov) = sample_function_key(
        mode.function_mode(),
        m,
        ell_for(f),
        REP_ORDER,
        &seed.derive("rep", m as u64),
        &KeyOverrides::default(),
    )?;
    let fin = sample_rwise(FIN_ORDER, n as u32, 1, &seed.derive("fin", 0))?;
    Ok((SingleCutKey { n, rep, fin }, prov))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiCutKey {
    n: usize,
    f: usize,
    /// `reps[i]` acts on `m = f + i` bits.
    reps: Vec<FunctionKey>,
    fin: RWiseKey,
}

impl MultiCutKey {
    pub fn new(n: usize, f: usize, reps: Vec<FunctionKey>, fin: RWiseKey) -> Result<Self> {
        if f == 0 || f > n {
            return Err(invalid(format!("need 1 <= f <= n, got f={f}, n={n}")));
        }
        if reps.len() != n - f + 1 {
            return Err(invalid(format!(
                "expected {} labelling keys, got {}",
                n - f + 1,
                reps.len()
            )));
        }
        for (i, r) in reps.iter().enumerate() {
            if r.m() != f + i {
                return Err(invalid(format!(
                    "labelling key {i} has m={}, expected {}",
                    r.m(),
                    f + i
                )));
            }
        }
        check_fin(&fin, n)?;
        Ok(MultiCutKey { n, f, reps, fin })
    }

    pub fn f(&self) -> usize {
        self.f
    }

    /// Labelling key acting on the leftmost `m` bits.
    pub fn rep(&self, m: usize) -> Option<&FunctionKey> {
        m.checked_sub(self.f).and_then(|i| self.reps.get(i))
    }

    pub fn reps(&self) -> &[FunctionKey] {
        &self.reps
    }

    pub fn label(&self, x: &BitString) -> Result<BitString> {
        x.expect_len(self.n)?;
        BitString::new(self.label_raw(x.value() as u64) as u128, self.n)
    }

    /// Label after applying only the steps `m = f, …, upto`.
    pub fn partial_label_raw(&self, x: u64, upto: usize) -> u64 {
        self.reps
            .iter()
            .take_while(|r| r.m() <= upto)
            .fold(x, |y, r| step(r, y, self.n))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": PHASE_FORMAT_VERSION,
            "n": self.n,
            "f": self.f,
            "fin": fin_json(&self.fin),
            "reps": self.reps.iter().map(FunctionKey::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        check_version(v)?;
        let n = as_usize(field(v, "n")?)?;
        let f = as_usize(field(v, "f")?)?;
        let reps = field(v, "reps")?
            .as_array()
            .ok_or_else(|| Error::Decode("reps must be an array".into()))?
            .iter()
            .map(FunctionKey::from_json)
            .collect::<Result<Vec<_>>>()?;
        let fin = fin_from_json(field(v, "fin")?)?;
        Self::new(n, f, reps, fin).map_err(|e| Error::Decode(e.to_string()))
    }
}

impl PhaseKey for MultiCutKey {
    fn n(&self) -> usize {
        self.n
    }

    fn label_raw(&self, x: u64) -> u64 {
        self.reps.iter().fold(x, |y, r| step(r, y, self.n))
    }

    fn fin(&self) -> &RWiseKey {
        &self.fin
    }

    /// Uses per-key truth tables so each step is a lookup.
    fn label_table(&self) -> Result<Vec<u64>> {
        budget(
            "phase truth table (qubits)",
            self.n as u128,
            MAX_DENSE_QUBITS as u128,
        )?;
        let tables = self
            .reps
            .iter()
            .map(FunctionKey::truth_table)
            .collect::<Result<Vec<_>>>()?;
        let n = self.n;
        Ok((0..1u64 << n)
            .map(|x| {
                tables.iter().enumerate().fold(x, |y, (i, t)| {
                    let low = n - (self.f + i);
                    (t[(y >> low) as usize] << low) | (y & mask(low) as u64)
                })
            })
            .collect())
    }
}

pub fn sample_multi_cut_key(
    mode: EntanglementMode,
    n: usize,
    f: usize,
    seed: &Seed,
) -> Result<(MultiCutKey, Vec<Provenance>)> {
    if f == 0 || f > n {
        return Err(invalid(format!("need 1 <= f <= n, got f={f}, n={n}")));
    }
    let ell = ell_for(f);
    let mut reps = Vec::with_capacity(n - f + 1);
    let mut provs = Vec::with_capacity(n - f + 1);
    for m in f..=n {
        let (k, p) = sample_function_key(
            mode.function_mode(),
            m,
            ell.min(m),
            REP_ORDER,
            &seed.derive("rep", m as u64),
            &KeyOverrides::default(),
        )?;
        reps.push(k);
        provs.push(p);
    }
    let fin = sample_rwise(FIN_ORDER, n as u32, 1, &seed.derive("fin", 0))?;
    Ok((MultiCutKey { n, f, reps, fin }, provs))
}

pub fn label_single(key: &SingleCutKey, x: &BitString) -> Result<BitString> {
    key.label(x)
}

pub fn label_multi(key: &MultiCutKey, x: &BitString) -> Result<BitString> {
    key.label(x)
}

pub fn phase_value<K: PhaseKey>(key: &K, x: &BitString) -> Result<bool> {
    x.expect_len(key.n())?;
    Ok(key.phase_raw(x.value() as u64))
}

pub fn build_statevector<K: PhaseKey>(key: &K) -> Result<PhaseState> {
    PhaseState::from_signs(key.n(), key.phase_table()?)
}

fn fin_json(fin: &RWiseKey) -> Value {
    json!({
        "r": fin.r(),
        "in_bits": fin.in_bits(),
        "out_bits": fin.out_bits(),
        "coeffs": B64.encode(fin.coeff_bytes()),
    })
}

fn fin_from_json(v: &Value) -> Result<RWiseKey> {
    let bits = |k: &str| -> Result<u32> {
        as_usize(field(v, k)?)?
            .try_into()
            .map_err(|_| Error::Decode(format!("{k} out of range")))
    };
    let coeffs = field(v, "coeffs")?
        .as_str()
        .ok_or_else(|| Error::Decode("coeffs must be a base64 string".into()))?;
    let bytes = B64
        .decode(coeffs)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let key = RWiseKey::from_coeff_bytes(bits("in_bits")?, bits("out_bits")?, &bytes)?;
    if key.r() != as_usize(field(v, "r")?)? {
        return Err(Error::Decode(
            "fin r disagrees with coefficient count".into(),
        ));
    }
    Ok(key)
}

fn field<'a>(v: &'a Value, k: &str) -> Result<&'a Value> {
    v.get(k)
        .ok_or_else(|| Error::Decode(format!("missing field {k:?}")))
}

fn as_usize(v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Decode(format!("expected unsigned integer, got {v}")))
}

fn check_version(v: &Value) -> Result<()> {
    match field(v, "version")?.as_u64() {
        Some(x) if x == PHASE_FORMAT_VERSION as u64 => Ok(()),
        other => Err(Error::Decode(format!("unsupported key version {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_is_ceil_sqrt() {
        assert_eq!([1, 2, 4, 5, 9, 10].map(ell_for), [1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn single_cut_shapes() {
        let (k, _) =
            sample_single_cut_key(EntanglementMode::Low, 16, 4, &Seed::from_u64(1)).unwrap();
        assert_eq!((k.rep().m(), k.rep().ell()), (8, 2));
        assert!(sample_single_cut_key(EntanglementMode::Low, 15, 4, &Seed::from_u64(1)).is_err());
        assert!(sample_single_cut_key(EntanglementMode::Low, 16, 8, &Seed::from_u64(1)).is_err());
    }

    #[test]
    fn low_and_high_share_hashes() {
        let s = Seed::from_u64(9);
        let (lo, _) = sample_single_cut_key(EntanglementMode::Low, 12, 3, &s).unwrap();
        let (hi, _) = sample_single_cut_key(EntanglementMode::High, 12, 3, &s).unwrap();
        assert_eq!(lo.fin, hi.fin);
        assert_eq!(lo.rep.hash(), hi.rep.hash());
        assert_ne!(lo.rep.matrix(), hi.rep.matrix());
    }

    #[test]
    fn low_half_passes_through() {
        let (k, _) =
            sample_single_cut_key(EntanglementMode::High, 10, 2, &Seed::from_u64(3)).unwrap();
        for x in 0..1024u64 {
            assert_eq!(k.label_raw(x) & 31, x & 31);
        }
    }

    #[test]
    fn multi_table_matches_direct_labels() {
        let (k, _) =
            sample_multi_cut_key(EntanglementMode::High, 10, 4, &Seed::from_u64(4)).unwrap();
        let t = k.label_table().unwrap();
        assert!((0..1024u64).all(|x| t[x as usize] == k.label_raw(x)));
        assert_eq!(k.partial_label_raw(77, 20), k.label_raw(77));
        assert_eq!(k.partial_label_raw(77, 3), 77);
    }

    #[test]
    fn json_round_trips() {
        let (s, _) =
            sample_single_cut_key(EntanglementMode::Low, 8, 2, &Seed::from_u64(5)).unwrap();
        assert_eq!(SingleCutKey::from_json(&s.to_json()).unwrap(), s);
        let (m, _) = sample_multi_cut_key(EntanglementMode::Low, 8, 3, &Seed::from_u64(5)).unwrap();
        let v = m.to_json();
        assert_eq!(MultiCutKey::from_json(&v).unwrap(), m);
        let mut bad = v.clone();
        bad["version"] = json!(2);
        assert!(MultiCutKey::from_json(&bad).is_err());
    }

    #[test]
    fn statevector_is_normalized() {
        let (m, _) =
            sample_multi_cut_key(EntanglementMode::High, 8, 3, &Seed::from_u64(6)).unwrap();
        let psi = build_statevector(&m).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(psi
            .amplitudes()
            .iter()
            .all(|a| (a.abs() - 1.0 / 16.0).abs() < 1e-15));
    }
}
