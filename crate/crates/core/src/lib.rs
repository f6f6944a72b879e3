//! Quantum strategies, combs, and their time reversal.
//!
//! The crate is organised bottom-up: labeled tensor layouts and dense
//! operators, spectral routines, channels in Choi form, strategies with their
//! sequential realizations, the reversal transform, a primal-dual SDP solver,
//! and the entropic quantities built on top of it.

pub mod channels;
pub mod entropy;
pub mod error;
pub mod io;
pub mod layout;
pub mod linalg;
pub mod matrix;
pub mod random;
pub mod reversal;
pub mod sdp;
pub mod scalar;
pub mod strategies;

pub use error::{Error, Result};
pub use layout::{Factor, Layout};
pub use matrix::{Hermitian, Matrix};
pub use scalar::{Cx, Real};

pub type C64 = num_complex::Complex<f64>;
pub type ComplexMatrix = Matrix<f64>;
pub type HermitianOperator = Hermitian<f64>;
