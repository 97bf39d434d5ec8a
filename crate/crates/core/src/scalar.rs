//! Scalar abstraction shared by the observation model, the policies and the
//! analysis routines.
//!
//! Everything numeric in this crate is written against [`Scalar`], which is
//! implemented for `f32` and `f64`. The harness and the CLI instantiate the
//! `f64` versions through the aliases re-exported from the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::distr::{Distribution, Open01};
use rand::Rng;

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Uniform draw on the open interval (0, 1).
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {
    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Distribution::<f32>::sample(&Open01, rng)
    }
}

impl Scalar for f64 {
    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Distribution::<f64>::sample(&Open01, rng)
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
