//! Scalar abstraction shared by the numeric kernels.
//!
//! Dominance sorting, crowding distance, hypervolume, the simplex machine and
//! the benchmark functions are written once over [`Real`] and instantiated for
//! `f32` and `f64`. The study engine itself stores `f64` because trial values
//! travel through JSON journals and the plugin wire format.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the generic numeric kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("every f64 literal is representable")
    }

    /// Widens `self` to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite and non-finite floats widen to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::lit(-3.25).as_f64(), -3.25);
        assert!(<f32 as Real>::lit(f64::INFINITY).is_infinite());
    }
}
