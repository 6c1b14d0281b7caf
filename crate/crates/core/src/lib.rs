//! Finite element solver for dynamic linear viscoelasticity with a
//! power-law stress relaxation kernel.
//!
//! The velocity `w` satisfies
//! `rho w' - div I^{1-alpha}(D eps(w)) = f` on a rectangle, discretized with
//! P1/P2 Lagrange elements in space, Crank-Nicolson in time, and product
//! integration against piecewise-linear interpolants for the weakly singular
//! fractional integral `I^{1-alpha}`.

pub mod cli;
pub mod error;
pub mod exec;
pub mod fem;
pub mod fracquad;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod rates;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
