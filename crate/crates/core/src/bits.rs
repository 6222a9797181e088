//! Fixed-length bit strings.
//!
//! Bit position 1 is the leftmost (most significant) bit. A string of length
//! `len` is stored as an integer whose bit `len - i` holds position `i`, so the
//! integer value equals the usual binary reading of the written string.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_BITS: usize = 128;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    value: u128,
    len: usize,
}

#[inline]
pub(crate) fn mask(len: usize) -> u128 {
    if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    }
}

impl BitString {
    pub fn new(value: u128, len: usize) -> Result<Self> {
        if len > MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "bit length {len} > {MAX_BITS}"
            )));
        }
        if value & !mask(len) != 0 {
            return Err(Error::LengthMismatch {
                expected: len,
                got: 128 - value.leading_zeros() as usize,
            });
        }
        Ok(BitString { value, len })
    }

    pub fn zeros(len: usize) -> Self {
        BitString { value: 0, len }
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() > MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "bit length {} > {MAX_BITS}",
                bits.len()
            )));
        }
        let value = bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128);
        Ok(BitString {
            value,
            len: bits.len(),
        })
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at 1-based position `pos` (1 = leftmost).
    pub fn bit(&self, pos: usize) -> bool {
        assert!(
            pos >= 1 && pos <= self.len,
            "position {pos} outside 1..={}",
            self.len
        );
        (self.value >> (self.len - pos)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (1..=self.len).map(move |p| self.bit(p))
    }

    /// Leftmost `m` bits.
    pub fn msb(&self, m: usize) -> BitString {
        assert!(m <= self.len);
        BitString {
            value: self.value >> (self.len - m),
            len: m,
        }
    }

    /// Rightmost `k` bits.
    pub fn lsb(&self, k: usize) -> BitString {
        assert!(k <= self.len);
        BitString {
            value: self.value & mask(k),
            len: k,
        }
    }

    /// `self ∥ other`.
    pub fn concat(&self, other: &BitString) -> Result<BitString> {
        let len = self.len + other.len;
        if len > MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "bit length {len} > {MAX_BITS}"
            )));
        }
        let hi = if other.len >= 128 {
            0
        } else {
            self.value << other.len
        };
        Ok(BitString {
            value: hi | other.value,
            len,
        })
    }

    pub fn expect_len(&self, expected: usize) -> Result<()> {
        if self.len != expected {
            Err(Error::LengthMismatch {
                expected,
                got: self.len,
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Decode(format!("bad bit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        BitString::from_bits(&bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_lsb_concat() {
        let x: BitString = "01011010".parse().unwrap();
        assert_eq!(x.value(), 0x5A);
        assert_eq!(x.msb(3).to_string(), "010");
        assert_eq!(x.lsb(5).to_string(), "11010");
        assert_eq!(x.msb(3).concat(&x.lsb(5)).unwrap(), x);
        assert!(!x.bit(1));
        assert!(x.bit(2));
    }

    #[test]
    fn value_must_fit() {
        assert!(BitString::new(4, 2).is_err());
        assert!(BitString::new(3, 2).is_ok());
        assert_eq!(BitString::new(u128::MAX, 128).unwrap().len(), 128);
    }
}
