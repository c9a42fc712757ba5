//! Finite-energy vortex solutions of the Klein-Gordon-Maxwell system with
//! cylindrical symmetry, computed by charge-constrained energy minimization.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod electrostatic;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod io;
mod linsolve;
pub mod minimizer;
pub mod par;
pub mod potentials;
pub mod trial;

pub use error::{Error, Result};
