//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating point type implementing [`Real`].

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T> Real for T where T: RealField + FromPrimitive + ToPrimitive + Copy {}

/// Lift an `f64` constant (thresholds, config values) into the scalar type.
#[inline]
pub fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Wrap an angle to `[0, 2π)`.
pub fn wrap_to_circle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut a = a % two_pi;
    if a < T::zero() {
        a += two_pi;
    }
    a
}

/// Wrap an angle to `[-π, π)`.
pub fn wrap_to_signed<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut a = (a + T::pi()) % two_pi;
    if a < T::zero() {
        a += two_pi;
    }
    a - T::pi()
}

/// Circular distance between two angles, in `[0, π]`.
pub fn circular_distance<T: Real>(a: T, b: T) -> T {
    let d = wrap_to_circle(a - b);
    d.min(T::two_pi() - d)
}
