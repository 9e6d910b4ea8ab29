//! Scalar abstraction for the geometric core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the geometry and diversity code: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Total for the float types this is implemented for.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Rounds to an integer number of millionths, the resolution at which
/// coordinates are compared.
pub(crate) fn micro_key<T: Scalar>(x: T) -> i64 {
    (x * T::lit(1e6)).round().to_i64().unwrap_or(i64::MAX)
}
