//! SE(3): rigid transforms with the exponential/logarithm maps.
//!
//! Tangent vectors are ordered `(translation, rotation)`.

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::rotation::{skew, AxisAngle, Rotation};
use crate::scalar::{cast, Real};

/// Rigid transform: rotation plus translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T: Real> {
    pub rotation: Rotation<T>,
    pub translation: Vector3<T>,
}

/// Coefficients of `V = I + B·Ω + C·Ω²` and of `V⁻¹ = I - Ω/2 + D·Ω²`.
fn v_coefficients<T: Real>(theta2: T) -> (T, T, T) {
    if theta2 < cast(1e-8) {
        // Taylor to θ⁴
        let b = cast::<T>(0.5) - theta2 / cast(24.0) + theta2 * theta2 / cast(720.0);
        let c = cast::<T>(1.0 / 6.0) - theta2 / cast(120.0) + theta2 * theta2 / cast(5040.0);
        let d = cast::<T>(1.0 / 12.0) + theta2 / cast(720.0) + theta2 * theta2 / cast(30240.0);
        (b, c, d)
    } else {
        let theta = theta2.sqrt();
        let b = (T::one() - theta.cos()) / theta2;
        let c = (theta - theta.sin()) / (theta2 * theta);
        // D = (1 - (θ/2)·cot(θ/2)) / θ², finite on (0, π]
        let half = theta * cast(0.5);
        let d = (T::one() - half * half.cos() / half.sin()) / theta2;
        (b, c, d)
    }
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Pose { rotation: Rotation::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Rotation<T>, translation: Vector3<T>) -> Self {
        Pose { rotation, translation }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Pose { rotation: Rotation::identity(), translation }
    }

    /// `self ∘ other`: apply `other` first in the local frame of `self`.
    pub fn compose(&self, other: &Pose<T>) -> Pose<T> {
        Pose {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose<T> {
        let rinv = self.rotation.inverse();
        Pose { translation: -rinv.rotate(&self.translation), rotation: rinv }
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation.rotate(p) + self.translation
    }

    /// Logarithm map, returning the 6-vector `(ρ, ω)`.
    pub fn log(&self) -> Vector6<T> {
        let w = self.rotation.log();
        let theta2 = w.vector().norm_squared();
        let (b, c, d) = v_coefficients(theta2);
        let _ = (b, c);
        let hat = skew(w.vector());
        let v_inv = Matrix3::identity() - hat * cast::<T>(0.5) + hat * hat * d;
        let rho = v_inv * self.translation;
        let mut out = Vector6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&rho);
        out.fixed_rows_mut::<3>(3).copy_from(w.vector());
        out
    }

    /// Exponential map from a `(ρ, ω)` 6-vector.
    pub fn exp(xi: &Vector6<T>) -> Pose<T> {
        let rho: Vector3<T> = xi.fixed_rows::<3>(0).into();
        let omega: Vector3<T> = xi.fixed_rows::<3>(3).into();
        let theta2 = omega.norm_squared();
        let (b, c, _) = v_coefficients(theta2);
        let hat = skew(&omega);
        let v = Matrix3::identity() + hat * b + hat * hat * c;
        Pose {
            rotation: AxisAngle::new(omega).exp(),
            translation: v * rho,
        }
    }

    /// Right-multiplicative increment used as the local parameterization in
    /// the optimizer: `self ∘ exp(δ)`.
    pub fn boxplus(&self, delta: &Vector6<T>) -> Pose<T> {
        self.compose(&Pose::exp(delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_pose, rng};
    use approx::assert_relative_eq;

    #[test]
    fn log_of_identity_is_zero() {
        assert_eq!(Pose::<f64>::identity().log(), Vector6::zeros());
    }

    #[test]
    fn log_of_pure_translation() {
        let p = Pose::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let xi = p.log();
        assert_relative_eq!(xi[0], 1.0);
        assert_relative_eq!(xi[1], 2.0);
        assert_relative_eq!(xi[2], 3.0);
        assert_eq!(xi.fixed_rows::<3>(3).norm(), 0.0);
    }

    #[test]
    fn exp_log_roundtrip_1000_samples() {
        let mut rng = rng(17);
        for _ in 0..1000 {
            let p = random_pose(&mut rng);
            let back = Pose::exp(&p.log());
            let err = (p.rotation.matrix() - back.rotation.matrix()).norm()
                + (p.translation - back.translation).norm();
            assert!(err < 1e-9, "roundtrip error {err}");
        }
    }

    #[test]
    fn compose_with_identity() {
        let mut rng = rng(5);
        let p = random_pose(&mut rng);
        let q = Pose::identity().compose(&p);
        assert!((q.translation - p.translation).norm() < 1e-15);
        assert!((q.rotation.matrix() - p.rotation.matrix()).norm() < 1e-15);
    }

    #[test]
    fn group_axioms_on_random_elements() {
        let mut rng = rng(23);
        for _ in 0..1000 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let c = random_pose(&mut rng);

            let id = a.compose(&a.inverse());
            assert!(id.translation.norm() < 1e-12);
            assert!((id.rotation.matrix() - Matrix3::identity()).norm() < 1e-12);

            let double_inv = a.inverse().inverse();
            assert!((double_inv.translation - a.translation).norm() < 1e-12);

            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert!((left.translation - right.translation).norm() < 1e-12);
            assert!((left.rotation.matrix() - right.rotation.matrix()).norm() < 1e-12);
        }
    }
}
