//! Lossy-function phase states, entanglement diagnostics and clock
//! Hamiltonians at desk scale.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod circuit;
pub mod clock;
pub mod entanglement;
pub mod error;
pub mod gf2;
pub mod grid2d;
pub mod hash;
pub mod lanczos;
pub mod lossy;
pub mod phase;
pub mod rank;
pub mod scalar;
pub mod seed;
pub mod sparse;
pub mod state;
pub mod zq;

pub use bits::BitString;
pub use error::{Error, Result};
pub use seed::Seed;
pub use state::{ComplexState, PhaseState, StateVector};

pub type C64 = num_complex::Complex<f64>;
pub type SparseOperator = sparse::SparseOperator<C64>;
pub use entanglement::DensityMatrix;
