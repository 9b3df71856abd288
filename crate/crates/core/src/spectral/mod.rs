//! Fourier-in-x / finite-difference-in-y discretization.
//!
//! Fields are analytic in the periodic direction and square integrable in the
//! wall-normal direction. This module provides transforms, derivatives,
//! quadrature, the exponential Fourier multiplier, and anisotropic Sobolev
//! norms `H^{s,0}`.

mod field;
mod grid;
mod tridiag;

pub use field::SpectralField;
pub use grid::Grid;
pub use tridiag::TridiagonalFactor;
