//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type accepted by the kernels, the quadrature and the samplers.
///
/// Implemented for `f32` and `f64`. Special functions and quadrature nodes are
/// computed in `f64` and narrowed, so `f32` runs inherit `f32` rounding only in
/// the arithmetic around them.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon of the type as an `f64`.
    const EPS: f64;

    fn of(x: f64) -> Self;

    fn f64(self) -> f64;
}

impl Scalar for f64 {
    const EPS: f64 = f64::EPSILON;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const EPS: f64 = f32::EPSILON as f64;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}

/// Shorthand for lifting an `f64` literal into `T`.
#[inline]
pub(crate) fn c<T: Scalar>(x: f64) -> T {
    T::of(x)
}
