//! Scalar traits shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating point type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    /// Conversion from a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    /// Conversion back to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Entry type of vectors and matrices: a real number or a complex number over a [`Real`].
pub trait Field:
    Copy + NumAssign + Neg<Output = Self> + Sum + Default + Debug + Send + Sync + 'static
{
    type Real: Real;

    fn conj(self) -> Self;
    fn abs_sqr(self) -> Self::Real;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn scale(self, r: Self::Real) -> Self;

    fn modulus(self) -> Self::Real {
        self.abs_sqr().sqrt()
    }
}

impl<T: Real> Field for T {
    type Real = T;

    fn conj(self) -> T {
        self
    }
    fn abs_sqr(self) -> T {
        self * self
    }
    fn re(self) -> T {
        self
    }
    fn im(self) -> T {
        T::zero()
    }
    fn from_real(r: T) -> T {
        r
    }
    fn scale(self, r: T) -> T {
        self * r
    }
    fn modulus(self) -> T {
        self.abs()
    }
}

impl<T: Real> Field for Complex<T> {
    type Real = T;

    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn abs_sqr(self) -> T {
        self.norm_sqr()
    }
    fn re(self) -> T {
        self.re
    }
    fn im(self) -> T {
        self.im
    }
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    fn scale(self, r: T) -> Self {
        Complex::new(self.re * r, self.im * r)
    }
    fn modulus(self) -> T {
        self.norm()
    }
}

/// Hermitian inner product `Σ a_i conj(b_i)`.
pub fn dot<S: Field>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y.conj()).sum()
}

/// Euclidean norm.
pub fn norm<S: Field>(a: &[S]) -> S::Real {
    a.iter().map(|x| x.abs_sqr()).sum::<S::Real>().sqrt()
}

/// `y += alpha * x`.
pub fn axpy<S: Field>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Unit complex number `e^{iθ}`.
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}
