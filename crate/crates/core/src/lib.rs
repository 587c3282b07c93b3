//! Per-Brownian-path numerical solvers for pathwise stochastic optimal control.
//!
//! Everything here operates on one fixed realization of the driving noise:
//! the value process of the random action functional is computed backward in
//! time on a spatial grid, the optimal drift is extracted from its gradient,
//! and a collection of independent oracles (cost enumeration, dynamic
//! programming on snapped lattices, adjoint descent, closed forms) certifies
//! the identities the solvers are supposed to satisfy.
//!
//! The crate is `no_std` (with `alloc`); all transcendental math goes through
//! [`libm`] so results are bit-identical across platforms. IO, file formats
//! and the experiment runner live in the companion `pathlab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod drift;
pub mod error;
pub mod fields;
pub mod hj;
pub mod invariants;
pub mod oracle;
pub mod pathwise;
pub mod problem;
pub mod randomness;
pub mod reference;
pub mod time;
pub mod vect;

pub(crate) mod flt;

pub use error::Error;
pub type Result<T> = core::result::Result<T, Error>;
