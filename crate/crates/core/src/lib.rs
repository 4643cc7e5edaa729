//! Numerical machinery for energies `∫ φ(x, |∇u|) dx` with generalized Orlicz
//! growth, including growth functions that are not doubling.
//!
//! The crate is `no_std` and only needs `alloc`. It is organised bottom-up:
//!
//! - [`phi`]: growth functions `φ(x, t)`, their one-sided derivatives and
//!   conjugates, and sampled certificates for (A0), (A1), (aInc) and (aDec).
//! - [`regularization`]: the ball majorant `ψ_B` and the truncations `φ_λ`.
//! - [`function_spaces`]: triangulated planar domains, P1 fields, the modular
//!   and the Luxemburg norm.
//! - [`minimizer`]: discrete Dirichlet problems, a limited-memory quasi-Newton solver
//!   and the λ-continuation scheme for non-doubling growth.
//! - [`analysis`]: Harnack quotients, Bloch integrals, Caccioppoli sides,
//!   variational residuals, Lebesgue monotonicity and sphere oscillations.
//!
//! Extended reals are plain `f64` values where `f64::INFINITY` stands for `+∞`.
#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod analysis;
mod error;
pub mod function_spaces;
pub(crate) mod math;
pub mod minimizer;
pub mod phi;
pub mod regularization;
pub mod serde_ext;

pub use error::{Error, Result};

/// A point of the plane.
pub type Point = [f64; 2];
