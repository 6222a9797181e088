//! Arithmetic in GF(2^w) for 1 ≤ w ≤ 128.
//!
//! Each width uses the minimal-weight irreducible polynomial: the trinomial
//! `x^w + x^k + 1` with the smallest `k` when one exists, otherwise the
//! pentanomial `x^w + x^a + x^b + x^c + 1` with `(a, b, c)` lexicographically
//! smallest. These are the entries of the standard low-weight tables
//! (e.g. `x^8 + x^4 + x^3 + x + 1`, `x^128 + x^7 + x^2 + x + 1`).

use crate::error::{invalid, Result};

pub const MAX_WIDTH: u32 = 128;

/// Middle exponents of the reduction polynomial for widths 1..=128.
/// `(k, 0, 0)` is the trinomial `x^w + x^k + 1`; width 1 is `x + 1`.
#[rustfmt::skip]
const TAILS: [(u8, u8, u8); 128] = [
    (0,0,0),(1,0,0),(1,0,0),(1,0,0),(2,0,0),(1,0,0),(1,0,0),(4,3,1),(1,0,0),(3,0,0),
    (2,0,0),(3,0,0),(4,3,1),(5,0,0),(1,0,0),(5,3,1),(3,0,0),(3,0,0),(5,2,1),(3,0,0),
    (2,0,0),(1,0,0),(5,0,0),(4,3,1),(3,0,0),(4,3,1),(5,2,1),(1,0,0),(2,0,0),(1,0,0),
    (3,0,0),(7,3,2),(10,0,0),(7,0,0),(2,0,0),(9,0,0),(6,4,1),(6,5,1),(4,0,0),(5,4,3),
    (3,0,0),(7,0,0),(6,4,3),(5,0,0),(4,3,1),(1,0,0),(5,0,0),(5,3,2),(9,0,0),(4,3,2),
    (6,3,1),(3,0,0),(6,2,1),(9,0,0),(7,0,0),(7,4,2),(4,0,0),(19,0,0),(7,4,2),(1,0,0),
    (5,2,1),(29,0,0),(1,0,0),(4,3,1),(18,0,0),(3,0,0),(5,2,1),(9,0,0),(6,5,2),(5,3,1),
    (6,0,0),(10,9,3),(25,0,0),(35,0,0),(6,3,1),(21,0,0),(6,5,2),(6,5,3),(9,0,0),(9,4,2),
    (4,0,0),(8,3,1),(7,4,2),(5,0,0),(8,2,1),(21,0,0),(13,0,0),(7,6,2),(38,0,0),(27,0,0),
    (8,5,1),(21,0,0),(2,0,0),(21,0,0),(11,0,0),(10,9,6),(6,0,0),(11,0,0),(6,3,1),(15,0,0),
    (7,6,1),(29,0,0),(9,0,0),(4,3,1),(4,0,0),(15,0,0),(9,7,4),(17,0,0),(5,4,2),(33,0,0),
    (10,0,0),(5,4,3),(9,0,0),(5,3,2),(8,7,5),(4,2,1),(5,2,1),(33,0,0),(8,0,0),(4,3,1),
    (18,0,0),(6,2,1),(2,0,0),(19,0,0),(7,6,5),(21,0,0),(1,0,0),(7,2,1),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2Field {
    width: u32,
    /// Reduction polynomial without its leading `x^w` term.
    low: u128,
}

impl Gf2Field {
    pub fn new(width: u32) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(invalid(format!(
                "field width {width} outside 1..={MAX_WIDTH}"
            )));
        }
        let (a, b, c) = TAILS[width as usize - 1];
        let low = if width == 1 {
            1
        } else if b == 0 {
            1 | (1u128 << a)
        } else {
            1 | (1u128 << a) | (1u128 << b) | (1u128 << c)
        };
        Ok(Gf2Field { width, low })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Exponents of the nonzero terms of the reduction polynomial, highest first.
    pub fn polynomial_terms(&self) -> Vec<u32> {
        let mut t = vec![self.width];
        t.extend((0..self.width).rev().filter(|&i| (self.low >> i) & 1 == 1));
        t
    }

    pub fn mask(&self) -> u128 {
        crate::bits::mask(self.width as usize)
    }

    #[inline]
    fn xtime(&self, a: u128) -> u128 {
        let top = (a >> (self.width - 1)) & 1;
        let shifted = if self.width == 128 {
            a << 1
        } else {
            (a << 1) & self.mask()
        };
        if top == 1 {
            shifted ^ self.low
        } else {
            shifted
        }
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        let mut r = 0u128;
        let mut i = 128 - b.leading_zeros();
        while i > 0 {
            i -= 1;
            r = self.xtime(r);
            if (b >> i) & 1 == 1 {
                r ^= a;
            }
        }
        r
    }

    pub fn pow(&self, a: u128, mut e: u128) -> u128 {
        let mut base = a;
        let mut acc = 1u128;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Carry-less product reduced by schoolbook long division, independent of `xtime`.
    fn slow_mul(f: &Gf2Field, a: u128, b: u128) -> u128 {
        let w = f.width() as usize;
        let mut prod = vec![false; 2 * w];
        for i in 0..w {
            for j in 0..w {
                if (a >> i) & 1 == 1 && (b >> j) & 1 == 1 {
                    prod[i + j] ^= true;
                }
            }
        }
        let terms = f.polynomial_terms();
        for d in (w..2 * w).rev() {
            if prod[d] {
                for &t in &terms {
                    prod[d - w + t as usize] ^= true;
                }
            }
        }
        (0..w)
            .filter(|&i| prod[i])
            .fold(0u128, |acc, i| acc | (1 << i))
    }

    #[test]
    fn aes_field_known_product() {
        let f = Gf2Field::new(8).unwrap();
        assert_eq!(f.polynomial_terms(), vec![8, 4, 3, 1, 0]);
        assert_eq!(f.mul(0x57, 0x83), 0xc1);
        assert_eq!(f.mul(0x53, 0xca), 0x01);
    }

    #[test]
    fn gcm_width_polynomial() {
        assert_eq!(
            Gf2Field::new(128).unwrap().polynomial_terms(),
            vec![128, 7, 2, 1, 0]
        );
        assert_eq!(
            Gf2Field::new(64).unwrap().polynomial_terms(),
            vec![64, 4, 3, 1, 0]
        );
    }

    #[test]
    fn mul_matches_schoolbook() {
        let mut s = 0x9e37_79b9_7f4a_7c15_u128;
        for w in [1u32, 2, 5, 8, 13, 16, 31, 64, 65, 96, 127, 128] {
            let f = Gf2Field::new(w).unwrap();
            for _ in 0..20 {
                s = s
                    .wrapping_mul(0x2545_f491_4f6c_dd1d)
                    .wrapping_add(1442695040888963407);
                let a = s & f.mask();
                let b = s.rotate_left(41) & f.mask();
                assert_eq!(f.mul(a, b), slow_mul(&f, a, b), "w={w}");
            }
        }
    }

    /// Rabin's test: x^(2^w) = x mod f, and gcd(x^(2^(w/p)) - x, f) = 1 for every prime p | w.
    #[test]
    fn table_polynomials_are_irreducible() {
        fn frob(f: &Gf2Field, k: u32) -> u128 {
            let mut x = 2u128;
            for _ in 0..k {
                x = f.mul(x, x);
            }
            x
        }
        fn poly_gcd_is_one(f: &Gf2Field, h: u128) -> bool {
            // gcd of the full reduction polynomial and h, on bit vectors of length ≤ 129
            let w = f.width();
            let mut a: Vec<bool> = (0..=w).map(|i| f.polynomial_terms().contains(&i)).collect();
            let mut b: Vec<bool> = (0..=w).map(|i| i < 128 && (h >> i) & 1 == 1).collect();
            let deg = |v: &Vec<bool>| v.iter().rposition(|&x| x);
            loop {
                let Some(db) = deg(&b) else {
                    return deg(&a) == Some(0);
                };
                while let Some(da) = deg(&a) {
                    if da < db {
                        break;
                    }
                    for i in 0..=db {
                        if b[i] {
                            a[i + da - db] ^= true;
                        }
                    }
                }
                std::mem::swap(&mut a, &mut b);
            }
        }
        for w in 2..=128u32 {
            let f = Gf2Field::new(w).unwrap();
            assert_eq!(frob(&f, w), 2, "w={w}");
            let mut n = w;
            let mut p = 2;
            while n > 1 {
                if n % p == 0 {
                    let h = frob(&f, w / p) ^ 2;
                    assert!(poly_gcd_is_one(&f, h), "w={w} p={p}");
                    while n % p == 0 {
                        n /= p;
                    }
                }
                p += 1;
            }
        }
    }

    #[test]
    fn rejects_bad_width() {
        assert!(Gf2Field::new(0).is_err());
        assert!(Gf2Field::new(129).is_err());
    }
}
