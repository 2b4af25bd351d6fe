//! Numerical laboratory for asymptotic limits of operators.
//!
//! * [`matkernel`]: dense complex linear algebra (eigen, SVD, PSD calculus).
//! * [`cesaro`]: power-boundedness, Cesàro asymptotic limits and their realization.
//! * [`commutant`]: block triangular contractions and the commutant mapping kernel.
//! * [`lazyop`]: infinite-dimensional operators evaluated exactly on finitely supported vectors.
//! * [`dirtree`]: weighted shifts on directed trees, their asymptotics and cyclicity.
//! * [`repro`]: registry of reproducible scenarios with checked expectations.

pub mod cesaro;
pub mod commutant;
pub mod dirtree;
pub mod error;
pub mod exact;
pub mod lazyop;
pub mod matkernel;
pub mod random;
pub mod repro;

pub use error::{Error, Result};
pub use matkernel::{CMatrix, C64};
