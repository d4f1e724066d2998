//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Real floating-point type the numerical core is written against.
///
/// Implemented for `f32` and `f64`. Accuracy contracts quoted in the
/// individual modules refer to `f64`; `f32` instantiations run the same
/// algorithms with correspondingly looser results.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self;

    /// Lossy conversion to `f64` for diagnostics and error payloads.
    fn as_f64(self) -> f64;

    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn euler_gamma() -> Self {
        Self::lit(EULER_GAMMA)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
