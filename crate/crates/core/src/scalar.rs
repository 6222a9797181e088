//! Scalar abstractions shared by the numeric modules.
//!
//! Real quantities (entropies, norms, probabilities) are generic over [`Real`],
//! which is implemented for `f32` and `f64`. Operators and state vectors are
//! generic over [`Scalar`], implemented for the two reals and their complex
//! counterparts.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// f32 or f64.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field element usable as a matrix or vector entry.
pub trait Scalar:
    Copy
    + NumAssign
    + std::ops::Neg<Output = Self>
    + Sum
    + PartialEq
    + Default
    + Debug
    + Send
    + Sync
    + 'static
{
    type Real: Real;

    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    /// `None` when `im` is nonzero and the type cannot hold it.
    fn from_parts(re: Self::Real, im: Self::Real) -> Option<Self>;

    fn norm_sqr(self) -> Self::Real {
        let (a, b) = (self.re(), self.im());
        a * a + b * b
    }

    fn modulus(self) -> Self::Real {
        self.norm_sqr().sqrt()
    }
}

macro_rules! real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            fn conj(self) -> Self {
                self
            }
            fn re(self) -> $t {
                self
            }
            fn im(self) -> $t {
                0.0
            }
            fn from_real(r: $t) -> Self {
                r
            }
            fn from_parts(re: $t, im: $t) -> Option<Self> {
                (im == 0.0).then_some(re)
            }
        }
    };
}

real_scalar!(f32);
real_scalar!(f64);

impl<R: Real> Scalar for Complex<R> {
    type Real = R;
    fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }
    fn re(self) -> R {
        self.re
    }
    fn im(self) -> R {
        self.im
    }
    fn from_real(r: R) -> Self {
        Complex::new(r, R::zero())
    }
    fn from_parts(re: R, im: R) -> Option<Self> {
        Some(Complex::new(re, im))
    }
}

/// Binary entropy h(p) in bits with h(0) = h(1) = 0.
pub fn binary_entropy<R: Real>(p: R) -> R {
    if p <= R::zero() || p >= R::one() {
        return R::zero();
    }
    let q = R::one() - p;
    -(p * p.log2() + q * q.log2())
}

/// Shannon entropy in bits of a (possibly unnormalized-by-roundoff) distribution.
/// Nonpositive weights contribute nothing.
pub fn shannon_bits<R: Real>(probs: impl IntoIterator<Item = R>) -> R {
    let h: R = probs
        .into_iter()
        .filter(|&p| p > R::zero())
        .map(|p| -p * p.log2())
        .sum();
    // a lone probability just above 1 gives a tiny negative sum
    if h < R::zero() {
        R::zero()
    } else {
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0f64), 0.0);
        assert_eq!(binary_entropy(1.0f64), 0.0);
        assert!((binary_entropy(0.5f64) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.5f32) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shannon_ignores_zero_weights() {
        let s: f64 = shannon_bits([0.5, 0.5, 0.0, -1e-18]);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_scalar_ops() {
        let z = Complex::new(3.0f64, 4.0);
        assert_eq!(z.modulus(), 5.0);
        assert_eq!(Scalar::conj(z), Complex::new(3.0, -4.0));
        assert_eq!(<f64 as Scalar>::from_parts(1.0, 2.0), None);
    }
}
