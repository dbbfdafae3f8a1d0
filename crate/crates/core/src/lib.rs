//! Long-range percolation on the hierarchical lattice Ω_N.
//!
//! The crate samples the random graph restricted to finite balls, runs the
//! good-ball renormalization cascade, solves the mean-field recursion and
//! evaluates the closed-form probabilities and bounds that drive the
//! percolation arguments, each one paired with an exact or Monte Carlo check.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod erconn;
pub mod error;
pub mod hierarchy;
pub mod meanfield;
pub mod numerics;
pub mod profiles;
pub mod renorm;
pub mod rng;
pub mod sampler;
pub mod unionfind;

pub use error::{Error, Result};
