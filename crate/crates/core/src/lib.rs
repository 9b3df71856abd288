//! Pseudo-spectral simulation of the relativistic MHD boundary-layer system
//! with Cattaneo relaxation, together with numerical checks of its
//! analytic-norm energy estimate, the product law behind it, and the
//! boundary-layer scalings it is derived from.
//!
//! Numerics are generic over `f32` and `f64` through [`Scalar`]; the
//! aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod integrator;
pub mod io;
pub mod lemma;
pub mod mms;
pub mod model;
pub mod presets;
pub mod rescaling;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid64 = spectral::Grid<f64>;
pub type Field = spectral::SpectralField<f64>;
pub type State64 = model::State<f64>;
pub type Params64 = model::Parameters<f64>;
pub type EnergyParams64 = energy::EnergyParams<f64>;
pub type Trajectory64 = integrator::Trajectory<f64>;
