//! Numerical core for controlled martingales with bounded steps.
//!
//! A controller picks, at every step, the law of the next increment from a
//! family of centered, bounded-support measures. The probability of landing
//! in a small ball at time `n` then decays like `n^-alpha`, and `alpha` is the
//! principal eigenvalue of a fully nonlinear elliptic problem. This crate
//! computes that exponent from both sides:
//!
//! * [`operators`]: control families and the extremal operators `F-`/`F+`
//!   on matrices and on sampled functions.
//! * [`value_dp`]: exact lattice dynamic programming for the maximal and
//!   minimal hitting probabilities, power-law fits and tail envelopes.
//! * [`eigensolver`]: radial shooting for the principal eigenpair and the
//!   self-similar parabolic profile.
//! * [`certifier`]: super/subsolution certificates bracketing the exponent,
//!   plus checks of the finite-difference test-function estimates.
//! * [`simulator`]: Monte Carlo paths under explicit strategies with a
//!   counter-based generator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! drivers and the command line live in the `ctrlmart` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod certifier;
pub mod eigensolver;
mod error;
pub(crate) mod math;
pub mod operators;
pub mod simulator;
pub mod value_dp;

pub use error::{Error, Result};
pub use operators::{ControlFamily, DiscreteMeasure, FiniteFamily, Mode, SymMatrix};
