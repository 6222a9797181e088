//! Dense state vectors over n qubits.
//!
//! Index `x` holds the amplitude of the basis string whose position 1 (the
//! leftmost bit) is the most significant bit of `x`.

use num_complex::Complex;
use num_traits::{Float, One, Zero};

use crate::error::{budget, invalid, Result};
use crate::scalar::{Real, Scalar};

/// Largest qubit count for which a dense vector is built.
pub const MAX_DENSE_QUBITS: usize = 22;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n: usize,
    amps: Vec<T>,
}

impl<T: Scalar> StateVector<T> {
    pub fn new(n: usize, amps: Vec<T>) -> Result<Self> {
        budget("dense state (qubits)", n as u128, MAX_DENSE_QUBITS as u128)?;
        if amps.len() != 1usize << n {
            return Err(invalid(format!(
                "{n} qubits need {} amplitudes, got {}",
                1usize << n,
                amps.len()
            )));
        }
        Ok(StateVector { n, amps })
    }

    /// `|x⟩` for a basis index `x`.
    pub fn basis(n: usize, x: usize) -> Result<Self> {
        budget("dense state (qubits)", n as u128, MAX_DENSE_QUBITS as u128)?;
        if x >> n != 0 {
            return Err(invalid(format!(
                "basis index {x} needs more than {n} qubits"
            )));
        }
        let mut amps = vec![T::zero(); 1 << n];
        amps[x] = T::one();
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<T> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T::Real {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > T::Real::zero()) {
            return Err(invalid("cannot normalize the zero vector"));
        }
        let s = T::from_real(T::Real::one() / norm);
        for a in &mut self.amps {
            *a *= s;
        }
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.n != other.n {
            return Err(invalid(format!(
                "inner product of {} and {} qubit states",
                self.n, other.n
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(&a, &b)| a.conj() * b)
            .sum())
    }

    pub fn to_complex(&self) -> StateVector<Complex<f64>> {
        StateVector {
            n: self.n,
            amps: self
                .amps
                .iter()
                .map(|a| Complex::new(a.re().as_f64(), a.im().as_f64()))
                .collect(),
        }
    }
}

/// Phase states have real amplitudes `±2^{-n/2}`.
pub type PhaseState = StateVector<f64>;

pub type ComplexState = StateVector<Complex<f64>>;

impl PhaseState {
    /// `2^{-n/2} Σ_x (-1)^{s(x)} |x⟩` from a sign table.
    pub fn from_signs(n: usize, signs: impl IntoIterator<Item = bool>) -> Result<Self> {
        let a = (0.5f64).powf(n as f64 / 2.0);
        let amps: Vec<f64> = signs.into_iter().map(|s| if s { -a } else { a }).collect();
        Self::new(n, amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_and_inner() {
        let a = StateVector::<f64>::basis(2, 3).unwrap();
        let b = StateVector::<f64>::basis(2, 1).unwrap();
        assert_eq!(a.inner(&a).unwrap(), 1.0);
        assert_eq!(a.inner(&b).unwrap(), 0.0);
        assert!(StateVector::<f64>::basis(2, 4).is_err());
    }

    #[test]
    fn phase_state_norm() {
        let s = PhaseState::from_signs(3, (0..8).map(|x| x % 3 == 0)).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(PhaseState::from_signs(3, [false; 7]).is_err());
    }

    #[test]
    fn budget_enforced() {
        assert!(StateVector::<f64>::basis(23, 0).is_err());
    }
}
