//! Minimal SO(3)/SE(3) toolkit: exponential and logarithm maps, composition,
//! inversion, and the spherical axis parameterization.
//!
//! All types are immutable values and every operation is pure.

mod pose;
mod rotation;
mod spherical;

pub use pose::Pose;
pub use rotation::{canonical_axis_sign, skew, AxisAngle, Rotation};
pub use spherical::{rotation_between, SphericalAxis};
