//! Scalar abstraction for the numeric kernels.
//!
//! Everything downstream (graph weights, embeddings, metrics) is generic over
//! [`Scalar`]. `f32` and `f64` are the provided implementations; `f64` is what
//! the CLI and the on-disk formats use.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar usable for graph weights and embeddings.
///
/// `Display`/`FromStr` must round-trip exactly (true for the primitive floats
/// via shortest-representation formatting); this is what the text embedding
/// format relies on.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Display
    + FromStr
    + Debug
    + Send
    + Sync
    + 'static
{
    /// One draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless-enough conversion from `f64` for configuration constants.
    fn from_config(value: f64) -> Self {
        Self::from_f64(value).expect("finite config value")
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Dot product with a fixed left-to-right accumulation order.
///
/// The accumulation order is part of the determinism contract: rankings and
/// their brute-force oracles must agree bit-for-bit.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += *x * *y;
    }
    acc
}

/// Euclidean norm, accumulated left to right.
#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
