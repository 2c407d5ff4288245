//! Floating-point scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the z-score, distance, and clustering math is generic over.
///
/// `f32` and `f64` both qualify. The crate-root aliases pin `f64`, which is
/// what the pipeline uses.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Display + Debug + 'static {
    /// Lossless conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + ToPrimitive + Display + Debug + 'static {}
