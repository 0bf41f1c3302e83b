//! 2D magnetohydrodynamic fluid / rigid-body interaction on a staggered MAC grid.
//!
//! The solver couples a regularized compressible Navier-Stokes substep
//! (rigid bodies handled by viscous penalization) with an implicitly
//! time-discretized induction equation for the magnetic potential. The
//! magnetic induction is represented as a perpendicular gradient of a
//! node potential, so the discrete divergence of B vanishes identically.

pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod ledger;
pub mod nondim;
pub mod ops;
pub mod pillbox;
pub mod quadrature;
pub mod run;
pub mod scheme;
pub mod solver;

pub use error::{Result, SimError};
