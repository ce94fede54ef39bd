//! Scalar abstraction for the numeric core.

use num_traits::{Float, FromPrimitive, NumAssignOps};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the numeric core is generic over.
pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the generic scalar.
///
/// Panics if the target type cannot represent the value at all; rounding
/// (f64 -> f32) is fine.
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal not representable in scalar type")
}
