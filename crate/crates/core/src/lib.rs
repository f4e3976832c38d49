//! Low-rank matrix recovery from few expansion coefficients in an arbitrary
//! operator basis.
//!
//! The crate is organized bottom-up: [`matcore`] holds the dense Hermitian
//! kernel, [`bases`] the operator bases and coherence, [`sampling`] the
//! index sets and the sampling operator, [`solver`] the nuclear-norm
//! program, [`golfing`] the dual-certificate construction, [`concentration`]
//! the tail bounds with Monte Carlo validation, [`stabilizer`] the
//! stabilizer-state lower bound and [`harness`] the experiment drivers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod bases;
pub mod concentration;
pub mod golfing;
pub mod harness;
pub mod matcore;
mod par;
pub mod sampling;
pub mod solver;
pub mod stabilizer;

pub use error::{Error, Result};
