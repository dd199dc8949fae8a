//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance that is attainable in this precision: `max(target, 100 eps)`.
    fn attainable(target: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(100.0);
        Self::lit(target).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}
