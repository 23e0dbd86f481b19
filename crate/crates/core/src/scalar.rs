//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type the model is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Largest deviation of a transition row sum from 1 that is silently
    /// renormalized instead of rejected.
    fn row_sum_tolerance() -> Self;

    /// Converts an `f64` literal; every literal used by the crate is
    /// representable in both implementations.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    // decimal text inputs are only accurate to ~1e-7 in single precision
    fn row_sum_tolerance() -> f32 {
        2e-6
    }
}

impl Scalar for f64 {
    fn row_sum_tolerance() -> f64 {
        1e-9
    }
}
