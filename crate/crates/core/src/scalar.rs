//! Scalar abstractions.
//!
//! Two levels of genericity are used throughout the crate:
//!
//! * [`Ring`] — an ordered commutative ring with exact division semantics.
//!   This is what the symmetric-polynomial kernel is written against, so the
//!   same code runs in `f64` for sweeps and in [`num::BigRational`] when an
//!   inequality has to be certified exactly.
//! * [`Real`] — a floating-point scalar (`f32` or `f64`) for everything
//!   spectral: FFTs, eigenvalue problems, quadrature, solvers.

use num::BigRational;
use num_traits::{Float, FromPrimitive, Signed};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Ordered commutative ring (with division where the caller guarantees
/// exactness, e.g. rationals, or accepts rounding, e.g. floats).
pub trait Ring: Signed + Clone + PartialOrd {
    fn from_int(v: i64) -> Self;

    /// `true` for NaN/inf floats; exact types are always finite.
    fn is_finite_val(&self) -> bool {
        true
    }

    /// Small integer power by repeated multiplication.
    fn powi_ring(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Ring for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn is_finite_val(&self) -> bool {
        self.is_finite()
    }
}

impl Ring for f32 {
    fn from_int(v: i64) -> Self {
        v as f32
    }
    fn is_finite_val(&self) -> bool {
        self.is_finite()
    }
}

impl Ring for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
}

/// Floating-point scalar for the spectral/field layer.
pub trait Real:
    Float + FromPrimitive + Signed + Sum + Display + LowerExp + Debug + rustfft::FftNum + Ring
{
    /// Shorthand for lossy conversion of an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + Signed + Sum + Display + LowerExp + Debug + rustfft::FftNum + Ring
{
}

/// Convert an `f64` into an exact rational. Every finite double is a dyadic
/// rational, so this is lossless; it is how float results get re-audited by
/// the exact backend.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}
