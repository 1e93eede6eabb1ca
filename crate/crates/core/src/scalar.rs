//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the model is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tag stored in checkpoints.
    const NAME: &'static str;

    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[inline]
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// Numerically stable softmax.
pub fn softmax<S: Scalar>(scores: &[S]) -> Vec<S> {
    let max = scores
        .iter()
        .copied()
        .fold(S::neg_infinity(), |a, b| if b > a { b } else { a });
    let mut out: Vec<S> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: S = out.iter().copied().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Backward pass of softmax: given `y = softmax(s)` and `dL/dy`, returns `dL/ds`.
pub fn softmax_backward<S: Scalar>(probs: &[S], grad: &[S]) -> Vec<S> {
    let inner: S = probs.iter().zip(grad).map(|(&p, &g)| p * g).sum();
    probs
        .iter()
        .zip(grad)
        .map(|(&p, &g)| p * (g - inner))
        .collect()
}
