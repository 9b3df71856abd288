//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type the solver is generic over.
///
/// Implemented for `f32` and `f64`. The verification suites are calibrated
/// for `f64`; `f32` is useful for quick exploratory runs.
pub trait Scalar:
    Float + FloatConst + FftNum + FromPrimitive + ToPrimitive + Sum + Display + Debug + Default
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest exponent accepted by `exp` before the result is treated as an
    /// overflow risk.
    fn max_exponent() -> Self;
}

impl Scalar for f32 {
    fn max_exponent() -> Self {
        80.0
    }
}

impl Scalar for f64 {
    fn max_exponent() -> Self {
        700.0
    }
}
