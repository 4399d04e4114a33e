use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Element type for the tensor kernels. The training pipeline runs on `f64`
/// (the [`crate::Mat`] / [`crate::SpMat`] aliases); `f32` satisfies the same
/// bound for callers that trade precision for storage.
///
/// Blanket-implemented, so any float type with the numeric conversions below
/// qualifies automatically.
pub trait Scalar:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts from `f64`, truncating precision if the target is narrower.
    /// Panics on values unrepresentable even approximately (never for finite
    /// inputs on f32/f64).
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 must convert to Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar must convert to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssignOps
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Numerically stable logistic function, computed without overflow for any
/// finite input: both branches only exponentiate non-positive values.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    let one = S::one();
    if x >= S::zero() {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    }
}

/// Numerically stable `ln(1 + exp(x))`, exact in the large-|x| limits.
pub fn softplus<S: Scalar>(x: S) -> S {
    // max(x, 0) + ln(1 + exp(-|x|)) in exact arithmetic equals softplus(x)
    x.max(S::zero()) + x.abs().neg().exp().ln_1p()
}
