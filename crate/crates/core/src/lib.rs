// Validations write `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Pathwise free-knot spline approximation of scalar SDEs with additive noise.
//!
//! The crate simulates Brownian paths on a fine grid (`grid`), solves the
//! inner best-polynomial problem in sup norm (`minimax`), places knots by
//! stopping times and builds optimal splines per path (`freeknot`), runs the
//! coarse Euler scheme and the spline-based approximation methods (`sde`),
//! and estimates errors and asymptotic constants by Monte Carlo (`harness`).

pub mod error;
pub mod freeknot;
pub mod grid;
pub mod harness;
pub mod minimax;
pub mod sde;

pub use error::{Error, Result};
pub use grid::{sample_wiener, shifted_subpath, FineGrid, SamplePath, SeedSpec};
