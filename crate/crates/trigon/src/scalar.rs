//! Scalar abstraction: every numeric routine in the crate is generic over a
//! floating-point type implementing [`Scalar`] (`f32` or `f64`).

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar for embedding math.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant (margins, rates, cached tangents) into the
/// working scalar type.
#[inline]
pub fn from_f64<S: Scalar>(value: f64) -> S {
    S::from_f64(value).expect("f64 constant not representable in scalar type")
}
