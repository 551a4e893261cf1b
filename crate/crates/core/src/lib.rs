//! Removal of stationary noise from periodic images of dimension 1 to 3.
//!
//! An observation `u0 = u + Σ_i ψ_i ⋆ λ_i` is split into a piecewise smooth
//! image `u` and colored noises `b_i = ψ_i ⋆ λ_i` by minimizing the total
//! variation of `u` plus a penalty on the white-noise weights `λ_i`. The crate
//! also provides the tools to choose the penalty weights, to simulate such
//! noise, and to measure how Gaussian a filtered white noise is.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the common `f64` case.

pub mod bounds;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod multi;
pub mod noise;
pub mod ops;
pub mod scalar;
pub mod solver;
pub mod spectral;

mod engine;

pub use error::{Error, Result};
pub use grid::{Dims, Field, Grid, PNorm};
pub use scalar::Real;

/// Real `f64` image on a periodic grid.
pub type ImageGrid = Grid<f64>;
/// DFT coefficients of an [`ImageGrid`].
pub type Spectrum = spectral::Spectrum<f64>;
/// One `f64` channel per axis.
pub type VectorField = Field<f64>;

pub type ImageGridF32 = Grid<f32>;
pub type SpectrumF32 = spectral::Spectrum<f32>;
pub type VectorFieldF32 = Field<f32>;
