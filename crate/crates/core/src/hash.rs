//! r-wise independent hash families: polynomials of degree r-1 over GF(2^w),
//! evaluated at the field embedding of the input and truncated to the low
//! `out_bits` bits.

use rand::Rng;

use crate::bits::{mask, BitString};
use crate::error::{invalid, Error, Result};
use crate::gf2::{Gf2Field, MAX_WIDTH};
use crate::seed::Seed;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RWiseKey {
    r: usize,
    in_bits: u32,
    out_bits: u32,
    /// Ascending degree: `coeffs[0]` is the constant term.
    coeffs: Vec<u128>,
    field: Gf2Field,
}

impl RWiseKey {
    pub fn new(in_bits: u32, out_bits: u32, coeffs: Vec<u128>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("independence order r must be at least 1"));
        }
        if in_bits == 0 || out_bits == 0 {
            return Err(invalid("bit lengths must be positive"));
        }
        let w = in_bits.max(out_bits);
        if w > MAX_WIDTH {
            return Err(invalid(format!("field width {w} exceeds {MAX_WIDTH}")));
        }
        let field = Gf2Field::new(w)?;
        if let Some(c) = coeffs.iter().find(|&&c| c & !field.mask() != 0) {
            return Err(invalid(format!("coefficient {c:#x} wider than {w} bits")));
        }
        Ok(RWiseKey {
            r: coeffs.len(),
            in_bits,
            out_bits,
            coeffs,
            field,
        })
    }

    /// Constant function returning the low `out_bits` bits of `c`.
    pub fn constant(in_bits: u32, out_bits: u32, c: u128) -> Result<Self> {
        let w = in_bits.max(out_bits);
        Self::new(in_bits, out_bits, vec![c & mask(w as usize)])
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn in_bits(&self) -> u32 {
        self.in_bits
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    pub fn width(&self) -> u32 {
        self.field.width()
    }

    pub fn coeffs(&self) -> &[u128] {
        &self.coeffs
    }

    /// Evaluates on a raw `in_bits`-bit value without length checking.
    #[inline]
    pub fn eval_raw(&self, x: u128) -> u128 {
        let mut acc = 0u128;
        for &c in self.coeffs.iter().rev() {
            acc = self.field.mul(acc, x) ^ c;
        }
        acc & mask(self.out_bits as usize)
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        x.expect_len(self.in_bits as usize)?;
        BitString::new(self.eval_raw(x.value()), self.out_bits as usize)
    }

    /// Bytes per serialized coefficient: `ceil(w / 8)`.
    pub fn coeff_width(&self) -> usize {
        (self.width() as usize).div_ceil(8)
    }

    /// Coefficients as fixed-width little-endian words, constant term first.
    pub fn coeff_bytes(&self) -> Vec<u8> {
        let w = self.coeff_width();
        self.coeffs
            .iter()
            .flat_map(|c| c.to_le_bytes()[..w].to_vec())
            .collect()
    }

    pub fn from_coeff_bytes(in_bits: u32, out_bits: u32, bytes: &[u8]) -> Result<Self> {
        let w = (in_bits.max(out_bits) as usize).div_ceil(8);
        if w == 0 || bytes.is_empty() || !bytes.len().is_multiple_of(w) {
            return Err(Error::Decode(format!(
                "coefficient block of {} bytes is not a multiple of {w}",
                bytes.len()
            )));
        }
        let coeffs = bytes
            .chunks(w)
            .map(|c| {
                let mut b = [0u8; 16];
                b[..w].copy_from_slice(c);
                u128::from_le_bytes(b)
            })
            .collect();
        Self::new(in_bits, out_bits, coeffs).map_err(|e| Error::Decode(e.to_string()))
    }

    /// `u32 r, u32 in_bits, u32 out_bits` (little-endian) followed by the coefficient words.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.r as u32).to_le_bytes());
        out.extend_from_slice(&self.in_bits.to_le_bytes());
        out.extend_from_slice(&self.out_bits.to_le_bytes());
        out.extend(self.coeff_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Decode("hash key header truncated".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (r, in_bits, out_bits) = (word(0) as usize, word(4), word(8));
        let key = Self::from_coeff_bytes(in_bits, out_bits, &bytes[12..])?;
        if key.r != r {
            return Err(Error::Decode(format!(
                "header says r={r}, body holds {}",
                key.r
            )));
        }
        Ok(key)
    }
}

pub fn sample_rwise(r: usize, in_bits: u32, out_bits: u32, seed: &Seed) -> Result<RWiseKey> {
    sample_rwise_with(r, in_bits, out_bits, &mut seed.rng())
}

pub fn sample_rwise_with<R: Rng + ?Sized>(
    r: usize,
    in_bits: u32,
    out_bits: u32,
    rng: &mut R,
) -> Result<RWiseKey> {
    if r == 0 {
        return Err(invalid("independence order r must be at least 1"));
    }
    let w = in_bits.max(out_bits);
    if in_bits == 0 || out_bits == 0 || w > MAX_WIDTH {
        return Err(invalid(format!(
            "bit lengths ({in_bits}, {out_bits}) outside 1..={MAX_WIDTH}"
        )));
    }
    let m = mask(w as usize);
    let coeffs = (0..r).map(|_| rng.random::<u128>() & m).collect();
    RWiseKey::new(in_bits, out_bits, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_is_constant() {
        let k = sample_rwise(1, 8, 4, &Seed::from_u64(2)).unwrap();
        let y0 = k.eval_raw(0);
        assert!((0..256).all(|x| k.eval_raw(x) == y0));
    }

    #[test]
    fn trivial_keys() {
        let zero = RWiseKey::new(8, 8, vec![0, 0, 0]).unwrap();
        assert!((0..256).all(|x| zero.eval_raw(x) == 0));
        let c = RWiseKey::constant(16, 4, 0xabcd).unwrap();
        assert_eq!(c.eval_raw(77), 0xd);
        let id = RWiseKey::new(8, 8, vec![0, 1]).unwrap();
        assert!((0..256).all(|x| id.eval_raw(x) == x));
    }

    #[test]
    fn length_checked() {
        let k = sample_rwise(2, 8, 3, &Seed::from_u64(1)).unwrap();
        let short: BitString = "0101".parse().unwrap();
        assert!(matches!(
            k.eval(&short),
            Err(Error::LengthMismatch {
                expected: 8,
                got: 4
            })
        ));
        let ok = BitString::new(0x5a, 8).unwrap();
        assert_eq!(k.eval(&ok).unwrap().len(), 3);
    }

    #[test]
    fn parameter_validation() {
        assert!(sample_rwise(0, 8, 8, &Seed::from_u64(0)).is_err());
        assert!(sample_rwise(2, 0, 8, &Seed::from_u64(0)).is_err());
        assert!(sample_rwise(2, 129, 1, &Seed::from_u64(0)).is_err());
        assert!(RWiseKey::new(4, 4, vec![0x10]).is_err());
    }

    #[test]
    fn bytes_round_trip() {
        let k = sample_rwise(4, 64, 16, &Seed::from_u64(5)).unwrap();
        assert_eq!(k.coeff_width(), 8);
        assert_eq!(RWiseKey::from_bytes(&k.to_bytes()).unwrap(), k);
        let b = k.to_bytes();
        assert!(RWiseKey::from_bytes(&b[..b.len() - 3]).is_err());
    }
}
