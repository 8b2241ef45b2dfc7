//! Ordinal cross-entropy forecasting: target-to-probability encoding,
//! a decomposition-linear forecaster trained on bin distributions, point
//! reconstruction and metrics, and influence-function analysis tooling.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod influence;
pub mod loss;
pub mod model;
pub mod numerics;
pub mod prob;
pub mod targetdist;
pub mod train;

pub use error::{Error, Result};
pub use prob::{ProbGrid, ProbVector};
