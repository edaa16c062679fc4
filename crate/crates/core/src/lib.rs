//! Pole estimation for linear systems from noisy impulse-response samples.
//!
//! Nonuniformly sampled data are mapped onto a uniform grid by a
//! minimum-variance orthogonal-polynomial transform ([`polyxform`]); the
//! grid is then fed to one of three truncated-SVD estimators
//! ([`estimators`]). [`bench`] runs Monte Carlo comparisons of the estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod polyxform;

pub use error::{Error, Result};
