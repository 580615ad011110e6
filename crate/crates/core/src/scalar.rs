//! Scalar abstraction shared by every numerical module.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::LowerExp;

/// Real floating-point scalar the library is generic over (`f32`, `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + LowerExp {
    /// Converts an `f64` literal or tolerance into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;
pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type RMatrix<T> = DMatrix<T>;
pub type RVector<T> = DVector<T>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
/// `r e^{iθ}`.
pub fn polar<T: Real>(r: T, theta: T) -> Complex<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

pub(crate) fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Promotes a real matrix to a complex one.
pub fn to_complex<T: Real>(m: &RMatrix<T>) -> CMatrix<T> {
    m.map(cr)
}

pub fn real_part<T: Real>(m: &CMatrix<T>) -> RMatrix<T> {
    m.map(|z| z.re)
}

pub fn imag_part<T: Real>(m: &CMatrix<T>) -> RMatrix<T> {
    m.map(|z| z.im)
}
