//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the physics and fitting kernels are written against.
///
/// Implemented for `f32` and `f64`. Physical constants are stored as `f64` and
/// converted through [`Real::lit`]; tolerances that are expressed in absolute
/// terms (e.g. `1e-12`) are clamped against [`Float::epsilon`] where a single
/// precision build could not reach them.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(floor, factor * epsilon)`: the tightest tolerance this precision can honour.
    #[inline]
    fn tolerance(floor: f64, factor: f64) -> Self {
        Self::lit(floor).max(Self::lit(factor) * Self::epsilon())
    }
}

impl Real for f32 {}
impl Real for f64 {}
