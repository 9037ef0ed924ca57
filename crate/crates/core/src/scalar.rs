//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type the models are generic over (`f32`, `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync
{
    /// Converts an `f64` literal into `Self`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Converts an index or count into `Self`.
    fn from_count(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    /// Lossy conversion to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync
{
}

/// Complex counterpart of a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

pub(crate) fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

pub(crate) fn real<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

/// Unit-modulus phasor `exp(j * phase)`.
pub(crate) fn phasor<T: Real>(phase: T) -> Cplx<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Argument with the `arg(0) = 0` convention.
pub(crate) fn arg_or_zero<T: Real>(z: Cplx<T>) -> T {
    if z.re == T::zero() && z.im == T::zero() {
        T::zero()
    } else {
        z.im.atan2(z.re)
    }
}

/// `|z|`, without requiring `num_traits::Float` on the scalar.
pub(crate) fn modulus<T: Real>(z: Cplx<T>) -> T {
    z.re.hypot(z.im)
}
