//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over [`Scalar`], which is implemented
//! for `f32` and `f64`. The concrete aliases exported from the crate root use
//! `f64`, which is what the CLI and the file formats work with.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by all numeric routines.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + for<'a> Sum<&'a Self>
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Tolerance used when validating probability vectors and stochastic
    /// rows. Scaled to the precision of the type: `1e-9` for `f64` matches
    /// the validation contracts of this crate, `f32` gets a looser value.
    fn prob_tol() -> Self;

    /// Convert an `f64` constant, panicking if it is not representable.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in this scalar type")
    }
}

impl Scalar for f64 {
    fn prob_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn prob_tol() -> Self {
        1e-4
    }
}
