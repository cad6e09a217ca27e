//! Scalar abstractions.
//!
//! Floating-point code is written against [`Real`], implemented for `f32` and
//! `f64`. The permutation-moment algebra only needs field operations, so it is
//! written against the weaker [`Field`] and can be evaluated exactly over
//! rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// A floating-point scalar usable throughout the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the conversion is impossible,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Minimal field interface for the permutation-moment algebra.
///
/// Blanket-implemented for every `Num + FromPrimitive` type, which covers
/// `f32`, `f64` and `num_rational::BigRational`.
pub trait Field: Clone + Num + FromPrimitive {
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl<T: Clone + Num + FromPrimitive> Field for T {}
