//! Numerical laboratory for multifractional Brownian sheets.
//!
//! The field B(t), t in (0, inf)^N, is the moving-average Wiener integral
//! with a position-dependent Hurst vector H(t). This crate evaluates its
//! covariance by singular quadrature, samples it on grids, estimates local
//! times and level-set dimensions, and checks the results against the
//! exponent formulas implemented in [`hurst`].

pub mod error;
pub mod fit;
pub mod format;
pub mod gaussian;
pub mod grid;
pub mod hurst;
pub mod kernel;
pub mod levelset;
pub mod localtime;
pub mod manifest;
pub mod quad;
pub mod runner;
pub mod simulate;

pub use error::{Error, Result};
pub use grid::{Grid, Interval};
pub use hurst::{HurstFunctional, HurstSpec};
