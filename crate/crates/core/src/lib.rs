//! Four-wave Riemann problem for the two-dimensional pressure gradient system.
//!
//! The crate builds the far-field wave fan, solves the free-boundary problem
//! for the diffracted transonic shock on a body-fitted polar grid, recovers
//! the velocity inside the subsonic pocket and checks the qualitative
//! properties expected of the solution.
//!
//! Everything here works on `alloc` only. File formats and the command line
//! live in the companion `pgs-cli` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod driver;
pub mod elliptic;
mod error;
pub mod grid;
pub mod manufactured;
pub mod math;
pub mod recovery;
pub mod riemann;
pub mod shock;
pub mod sparse;
pub mod verify;

pub use driver::{continuation_from, continuation_solve, initial_shock, solve_fixed_boundary, solve_free_boundary, ConvergenceTrace, SolverConfig};
pub use error::Error;
pub use grid::{DomainGrid, NodeTag, PressureField, ShockCurve, SymmetryMode};
pub use riemann::{build_wave_fan, classify_discontinuity, RiemannConfig, State, WaveFan, WaveKind};
pub use recovery::{recover_velocity, sample_solution, CompositeSolution, VelocityField};
