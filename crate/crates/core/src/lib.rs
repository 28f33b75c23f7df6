//! Deterministic multiscale quantization of probability measures on `R^d`,
//! with exact and certified Wasserstein error evaluation.
//!
//! The crate is organized bottom-up:
//!
//! - [`measures`]: measures and their mass, moment and quantile queries.
//! - [`dyadic`]: the integer-splitting quantizer on dyadic annuli.
//! - [`transport`]: exact 1D and discrete transport, the multiscale functional.
//! - [`lowerbounds`]: rearrangement lower bounds and the optimality family sweep.
//! - [`harness`]: experiment configs, rate sweeps and reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. The flow solver
// indexes parallel arrays by node, which reads better than zipped iterators.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dyadic;
pub mod error;
pub mod extended;
pub mod geometry;
pub mod harness;
pub mod lowerbounds;
pub mod measures;
pub mod quadrature;
pub mod transport;

pub use error::{Error, Result};
pub use extended::Extended;
pub use geometry::HalfOpenBox;
pub use measures::Measure;
