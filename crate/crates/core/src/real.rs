//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over a floating-point scalar so the
//! same code runs at `f32` or `f64`; the crate root exports `f64` aliases,
//! which is what the command-line front end and the validation harness use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar used throughout the numeric core.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lift an `f64` constant into the scalar type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite constant")
    }

    /// Lift a count into the scalar type.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("representable count")
    }

    /// Lift a `±1` sign into the scalar type.
    fn of_sign(sign: i8) -> Self {
        if sign >= 0 {
            Self::one()
        } else {
            -Self::one()
        }
    }

    /// Half of `Self::one()`.
    fn half() -> Self {
        Self::of(0.5)
    }

    /// Two.
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Absolute tolerance for checks that are exact in `f64` at the documented
/// `base` level but need a few ulps of headroom at lower precision.
pub fn scaled_tolerance<R: Real>(base: f64, scale: usize) -> R {
    let ulps = R::epsilon() * R::of_usize(scale.max(1)) * R::of(16.0);
    R::of(base).max(ulps)
}
