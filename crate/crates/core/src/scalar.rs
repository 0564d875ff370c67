//! Floating-point scalar abstraction used by all numeric modules.
//!
//! Every probability distribution, weight vector, and score in this crate is
//! generic over [`Scalar`], so the same code runs in `f32` or `f64`. The
//! crate root exports `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + for<'a> Sum<&'a Self>
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64`, rounded for `f32`.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to any Scalar")
    }

    /// Conversion from a count. Counts in this crate stay well below 2^53.
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product of two equal-length slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean (L2) norm.
pub fn l2_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|&x| x * x).sum::<S>().sqrt()
}

/// Euclidean distance between two equal-length slices.
pub fn euclidean<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}

/// Cosine similarity; zero vectors yield 0.
pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> S {
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == S::zero() || nb == S::zero() {
        return S::zero();
    }
    dot(a, b) / (na * nb)
}

/// Rescale a non-negative vector in place so it sums to one.
/// Returns false (vector untouched) when the sum is zero.
pub fn l1_normalize<S: Scalar>(v: &mut [S]) -> bool {
    let total: S = v.iter().copied().sum();
    if total == S::zero() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
    true
}
