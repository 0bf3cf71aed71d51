//! Numerical verification toolkit for fractional bubbles on the flat model
//! `R^n` and its weighted half-space extension.

pub mod bubbles;
pub mod constants;
pub mod energy;
pub mod error;
pub mod extension;
pub mod fit;
pub mod interactions;
pub mod model;
pub mod params;
pub mod quadrature;
pub mod spectral;

pub use constants::{compute_constants, constant_set, ConstantSet};
pub use error::{Error, Result};
pub use model::Bubble;
pub use params::{make_params, FracParams};
