//! Simulation toolkit for the Hardy-Henon heat equation driven by additive
//! fractional Brownian noise.
//!
//! The crate is split along the natural layers of the problem:
//!
//! - [`fbm`]: one-dimensional fractional Brownian motion (covariance, Volterra
//!   kernel, the transfer operator `K*`, the reproducing-kernel inner product)
//!   and interchangeable path samplers.
//! - [`heat`]: periodic grids, discrete `L^q` norms, the spectral heat
//!   semigroup and the weighted operator `S_gamma(t) = e^{t Delta}(|x|^-gamma .)`.
//! - [`noise`]: cylindrical fBm on a trigonometric basis and the stochastic
//!   convolution `Z(t)`.
//! - [`mild`]: parameter validation, derived exponents, the existence-time
//!   certificate and the Picard solver for the mild formulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fbm;
pub mod heat;
pub mod mild;
pub mod noise;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
