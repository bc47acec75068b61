//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
///
/// The sparse factorization backend imposes its own field trait, so the bound
/// is the union of what `num-traits` and `faer` need.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + faer::traits::RealField
    + 'static
{
    /// Converts an `f64` constant (quadrature node, coefficient) into `Self`.
    #[inline]
    fn c(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 constant representable")
    }

    #[inline]
    fn from_usize_exact(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}
