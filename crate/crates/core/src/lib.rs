//! Sequential nearest-neighbor sampling of high-dimensional truncated
//! multivariate normal distributions.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod censored;
pub mod error;
pub mod eval;
pub mod field;
pub mod gaussian;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod lowdim;
pub mod rng;
pub mod snn;
#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
pub use snn::{precompute, sample, SampleEnsemble, SnnOptions, SnnPlan, TruncationProblem};
