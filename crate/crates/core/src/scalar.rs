//! Scalar abstraction: every physical quantity in the crate is generic over a
//! floating-point type, with `f64` as the working default.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar underlying all model quantities: f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal (physical constants, tolerances) into `Self`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in every Scalar type")
    }

    /// Converts an element count into `Self`.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in every Scalar type")
    }

    /// Lossy view as f64, for diagnostics payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}
