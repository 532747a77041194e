//! Scalar abstraction for the analytic solvers.

use std::fmt::{Debug, Display};
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the analytic modules are generic over: f32 or f64.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + AddAssign + Debug + Display + Default + 'static
{
    /// Lossless conversion from a small integer.
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar")
    }

    /// Conversion from an `f64` constant.
    fn of_f64(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
