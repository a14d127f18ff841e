//! Pseudo-spectral simulation of 2D generalized MHD with fractional velocity
//! dissipation and logarithmically weakened magnetic diffusion, together with
//! numerical checks of the kernel, Littlewood-Paley and Gronwall estimates
//! that govern its global regularity.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod config;
pub mod error;
pub mod fit;
pub mod grid;
pub mod gronwall;
pub mod io;
pub mod kernel;
pub mod quadrature;
pub mod solver;
pub mod symbols;

pub use error::{Error, Result};
pub use grid::{Axis, Grid2D, SpectralField2D};
pub use symbols::{GFunction, GKind, MultiplierSymbol, RadialWeight};
