//! Separation-of-variables toolkit for the quasi-periodic XXX spin-1/2 chain.
//!
//! The crate is organized bottom-up:
//!
//! * [`algebra_core`]: R-matrix, monodromy, twisted transfer matrices, Hamiltonian.
//! * [`spectrum`]: transfer-matrix spectrum, Baxter polynomials, Bethe equations.
//! * [`sov_states`]: SoV bases, separate states and their overlaps.
//! * [`slavnov`]: determinant formulas for scalar products.
//! * [`blocks_finite`]: elementary blocks at finite size, by brute force and by SoV sums.
//! * [`thermo`]: densities and multiple-integral block formulas in the thermodynamic limit.
//!
//! Loops over basis vectors, SoV indices and quadrature nodes take an
//! [`Execution`] argument and run on rayon when the `parallel` feature is on.

pub mod algebra_core;
pub mod blocks_finite;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod poly;
pub mod slavnov;
pub mod sov_states;
pub mod spectrum;
pub mod thermo;

pub type C = num_complex::Complex64;

pub use error::{Error, Result};
pub use exec::Execution;
