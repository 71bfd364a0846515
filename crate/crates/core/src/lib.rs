//! Diffusive unravellings of Lindblad master equations.
//!
//! The crate builds every member of the family of norm-preserving diffusive
//! state-vector equations whose ensemble average obeys a given Lindblad
//! equation, integrates them with a seeded Euler-Maruyama scheme, propagates
//! the master equation exactly through the matrix exponential of its
//! Liouvillian, and checks the two against each other.
//!
//! All numerics are generic over [`Real`]; the aliases below fix `f64`.

pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod observables;
pub mod output;
pub mod sampling;
pub mod scalar;
pub mod scenario;
pub mod sde;
pub mod tolerance;
pub mod unraveling;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Real, C};
pub use tolerance::Tolerances;

pub type C64 = num_complex::Complex64;
pub type Operator64 = hilbert::Operator<f64>;
pub type StateVector64 = hilbert::StateVector<f64>;
pub type DensityMatrix64 = hilbert::DensityMatrix<f64>;
pub type Operator32 = hilbert::Operator<f32>;
pub type StateVector32 = hilbert::StateVector<f32>;
