//! Spherical parameterization of unit axis directions, used by the optimizer
//! for the shared axis-of-symmetry parameters.
//!
//! Convention (physics): `v = (sin φ cos ψ, sin φ sin ψ, cos φ)` with the
//! polar angle `φ` measured from +z.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::rotation::Rotation;
use crate::scalar::{cast, wrap_to_signed, Real};

/// Unit direction as polar angle `φ ∈ [0, π]` and azimuth `ψ ∈ [-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalAxis<T: Real> {
    pub phi: T,
    pub psi: T,
}

impl<T: Real> SphericalAxis<T> {
    pub fn new(phi: T, psi: T) -> Self {
        SphericalAxis { phi, psi }
    }

    /// Unit vector for these angles.
    pub fn to_vector(&self) -> Vector3<T> {
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        Vector3::new(sp * self.psi.cos(), sp * self.psi.sin(), cp)
    }

    /// Angles for a unit vector. The input is renormalized; at the poles the
    /// azimuth is canonicalized to 0.
    pub fn from_vector(v: &Vector3<T>) -> Self {
        let v = v / v.norm();
        let phi = v.z.max(-T::one()).min(T::one()).acos();
        let planar = (v.x * v.x + v.y * v.y).sqrt();
        let psi = if planar < cast(1e-12) {
            T::zero()
        } else {
            wrap_to_signed(v.y.atan2(v.x))
        };
        SphericalAxis { phi, psi }
    }
}

/// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
/// For antiparallel inputs the half-turn axis is chosen deterministically.
pub fn rotation_between<T: Real>(from: &Vector3<T>, to: &Vector3<T>) -> Rotation<T> {
    let cross = from.cross(to);
    let dot = from.dot(to).max(-T::one()).min(T::one());
    let sin = cross.norm();
    if sin < cast(1e-12) {
        if dot > T::zero() {
            return Rotation::identity();
        }
        // pick any direction perpendicular to `from`
        let helper = if from.x.abs() < cast(0.9) { Vector3::x() } else { Vector3::y() };
        let axis = from.cross(&helper).normalize();
        return Rotation::from_axis_angle(&axis, T::pi());
    }
    let axis = cross / sin;
    Rotation::from_axis_angle(&axis, sin.atan2(dot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_unit_vector, rng};
    use approx::assert_relative_eq;

    #[test]
    fn pole_maps_to_z() {
        let v = SphericalAxis::new(0.0_f64, 0.0).to_vector();
        assert!((v - Vector3::z()).norm() < 1e-15);
    }

    #[test]
    fn equator_maps_to_x() {
        let v = SphericalAxis::new(std::f64::consts::FRAC_PI_2, 0.0_f64).to_vector();
        assert!((v - Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn unit_norm_invariant() {
        let mut rng = rng(2);
        for _ in 0..1000 {
            let phi = rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::PI);
            let psi = rand::Rng::random_range(&mut rng, -std::f64::consts::PI..std::f64::consts::PI);
            let v = SphericalAxis::new(phi, psi).to_vector();
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn roundtrip_1000_random_unit_vectors() {
        let mut rng = rng(19);
        for _ in 0..1000 {
            let v = random_unit_vector(&mut rng);
            let back = SphericalAxis::from_vector(&v).to_vector();
            assert!((v - back).norm() < 1e-9);
        }
    }

    #[test]
    fn azimuth_canonicalized_at_poles() {
        let s = SphericalAxis::from_vector(&Vector3::new(0.0, 0.0, -1.0));
        assert_relative_eq!(s.phi, std::f64::consts::PI);
        assert_eq!(s.psi, 0.0);
    }

    #[test]
    fn rotation_between_handles_antiparallel() {
        let mut rng = rng(31);
        for _ in 0..200 {
            let v = random_unit_vector(&mut rng);
            let r = rotation_between(&v, &(-v));
            assert!((r.rotate(&v) + v).norm() < 1e-9);
            assert!(r.defect() < 1e-9);
        }
    }
}
