//! Solitary waves of Whitham-type equations `u_t + (Lu + n(u))_x = 0`.
//!
//! Waves are computed as minimizers of the energy
//! `E(u) = -1/2 <u, Lu> - int N(u)` at fixed momentum `Q(u) = 1/2 int u^2 = mu`
//! on a large periodic grid, and compared against the long-wave (KdV-type)
//! limit. Interchangeable strategies (symbols, nonlinearities, descent
//! preconditioners, time integrators) are built by name from registries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod longwave;
pub mod nonlinearity;
pub mod operators;
pub mod registry;
pub mod solver;
pub mod symbol;

pub use error::{Error, ErrorClass, Result};
pub use functionals::Problem;
pub use grid::{PeriodicGrid, SpectralField};
pub use nonlinearity::Nonlinearity;
pub use solver::{SolveConfig, WaveProfile};
pub use symbol::DispersionSymbol;
