//! Simulation of CP-divisible (Markovian) dynamics of finite-dimensional
//! open quantum systems under time-periodic Lindbladians.
//!
//! The crate builds three independent routes to the same dynamics and
//! cross-validates them:
//!
//! * the factorized dynamical map `Lambda_t = P_t e^{t Lbar}` obtained from
//!   the Floquet normal form of the propagator,
//! * direct Runge-Kutta integration of the time-local master equation,
//! * a static block operator ("generalized Lindbladian") on a truncated
//!   Fourier space whose semigroup, evaluated back in the time domain,
//!   reproduces the dynamical map.
//!
//! Modules follow that structure: [`matrix`] and [`superop`] provide dense
//! complex primitives, [`periodic`] and [`floquet`] handle periodic matrix
//! functions and Floquet decompositions, [`bath`] and [`davies`] build
//! weak-coupling generators, [`lifting`] hosts the Fourier-space block
//! operators and their diagnostics, [`evolution`] propagates states, and
//! [`report`] collects named structural checks.

pub mod bath;
pub mod davies;
pub mod error;
pub mod evolution;
pub mod floquet;
pub mod json;
pub mod lifting;
pub mod matrix;
pub mod periodic;
pub mod report;
pub mod superop;

pub use error::{Error, Result};
pub use matrix::{CMat, DensityMatrix, Tolerances};
pub use superop::Superoperator;
