//! Real scalar abstraction for the numeric core.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Real scalar type the whole crate is generic over.
///
/// `f64` is the working type; `f32` is supported for the algebra but will
/// not meet the default `f64` tolerances.
pub trait Scalar:
    Float + FloatConst + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal (tolerances, constants).
    fn real(x: f64) -> Self {
        Self::from(x).expect("f64 constant representable in scalar type")
    }

    /// Lossy conversion to `f64` for reporting. Named to avoid colliding
    /// with `ToPrimitive::to_f64` in method resolution.
    fn as_f64(self) -> f64 {
        num_traits::cast::<Self, f64>(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over the crate scalar.
pub type Cx<T> = Complex<T>;

/// `0 + 0i`.
#[inline]
pub fn czero<T: Scalar>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

/// `1 + 0i`.
#[inline]
pub fn cone<T: Scalar>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

/// Real number promoted to the complex plane.
#[inline]
pub fn cre<T: Scalar>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// `0 + 1i`.
#[inline]
pub fn ci<T: Scalar>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}
