//! SO(3): rotations as 3x3 orthonormal matrices plus the axis-angle tangent
//! representation and the exponential/logarithm maps between them.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::scalar::{cast, Real};

/// Rotation matrix in SO(3): orthonormal with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation<T: Real> {
    matrix: Matrix3<T>,
}

/// Tangent element of SO(3): axis scaled by angle, canonicalized to `‖ω‖ ≤ π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle<T: Real> {
    omega: Vector3<T>,
}

/// Skew-symmetric matrix such that `skew(a) * b = a × b`.
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

fn vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Flip `v` so that its largest-magnitude component is positive.
/// Returns the canonical vector and whether a flip happened.
pub fn canonical_axis_sign<T: Real>(v: &Vector3<T>) -> (Vector3<T>, bool) {
    let mut idx = 0;
    for i in 1..3 {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < T::zero() {
        (-v, true)
    } else {
        (*v, false)
    }
}

/// Make the first nonzero component positive (deterministic axis for the
/// angle-π logarithm ambiguity).
fn lexicographic_sign<T: Real>(v: &Vector3<T>) -> Vector3<T> {
    let tol = cast::<T>(1e-12);
    for i in 0..3 {
        if v[i].abs() > tol {
            return if v[i] < T::zero() { -v } else { *v };
        }
    }
    *v
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Rotation { matrix: Matrix3::identity() }
    }

    /// Wrap a matrix assumed to be orthonormal with `det = +1`.
    pub fn from_matrix_unchecked(matrix: Matrix3<T>) -> Self {
        Rotation { matrix }
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.matrix
    }

    /// Rotation by `angle` about a unit `axis`.
    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        AxisAngle::new(axis * angle).exp()
    }

    pub fn rotate(&self, v: &Vector3<T>) -> Vector3<T> {
        self.matrix * v
    }

    pub fn compose(&self, other: &Rotation<T>) -> Rotation<T> {
        Rotation { matrix: self.matrix * other.matrix }
    }

    pub fn inverse(&self) -> Rotation<T> {
        Rotation { matrix: self.matrix.transpose() }
    }

    /// Orthonormality and determinant defect against the group invariants.
    pub fn defect(&self) -> T {
        let ortho = (self.matrix * self.matrix.transpose() - Matrix3::identity()).norm();
        let det = (self.matrix.determinant() - T::one()).abs();
        ortho.max(det)
    }

    /// Rotation angle of the geodesic to `other`, in `[0, π]`.
    pub fn angle_to(&self, other: &Rotation<T>) -> T {
        self.inverse().compose(other).log().angle()
    }

    /// Logarithm map to the axis-angle tangent vector, `‖ω‖ ≤ π`.
    ///
    /// At angle π the axis sign is fixed by making the first nonzero
    /// component positive.
    pub fn log(&self) -> AxisAngle<T> {
        let r = &self.matrix;
        let half = cast::<T>(0.5);
        let anti = vee(&(r - r.transpose())) * half;
        let cos_theta = ((r.trace() - T::one()) * half).max(-T::one()).min(T::one());
        let sin_theta = anti.norm().min(T::one());
        let theta = sin_theta.atan2(cos_theta);

        if theta < cast(1e-8) {
            // Second-order Taylor: ω ≈ vee(R - Rᵀ)/2 · (1 + θ²/6)
            let correction = T::one() + theta * theta / cast(6.0);
            return AxisAngle { omega: anti * correction };
        }

        if theta < cast(3.0 * std::f64::consts::FRAC_PI_4) {
            return AxisAngle { omega: anti * (theta / sin_theta) };
        }

        // Near π: recover the axis from the symmetric part,
        // a·aᵀ = (R + Rᵀ - (trace - 1)·I) / (3 - trace).
        let outer = (r + r.transpose() - Matrix3::identity() * (r.trace() - T::one()))
            / (cast::<T>(3.0) - r.trace());
        let mut best = 0;
        for i in 1..3 {
            if outer[(i, i)] > outer[(best, best)] {
                best = i;
            }
        }
        let mut axis = Vector3::zeros();
        axis[best] = outer[(best, best)].max(T::zero()).sqrt();
        for i in 0..3 {
            if i != best {
                axis[i] = outer[(best, i)] / axis[best];
            }
        }
        axis.normalize_mut();
        // Fix the sign: from the antisymmetric part when it is informative,
        // otherwise (angle exactly π) by the lexicographic convention.
        let axis = if anti.norm() > cast(1e-9) {
            if axis.dot(&anti) < T::zero() {
                -axis
            } else {
                axis
            }
        } else {
            lexicographic_sign(&axis)
        };
        AxisAngle { omega: axis * theta }
    }
}

impl<T: Real> AxisAngle<T> {
    /// Canonicalize a scaled-axis vector to `‖ω‖ ≤ π`.
    pub fn new(omega: Vector3<T>) -> Self {
        let angle = omega.norm();
        if angle <= T::pi() || angle < cast(1e-12) {
            return AxisAngle { omega };
        }
        let axis = omega / angle;
        let wrapped = crate::scalar::wrap_to_signed(angle);
        AxisAngle { omega: axis * wrapped }
    }

    pub fn zero() -> Self {
        AxisAngle { omega: Vector3::zeros() }
    }

    pub fn vector(&self) -> &Vector3<T> {
        &self.omega
    }

    pub fn angle(&self) -> T {
        self.omega.norm()
    }

    /// Unit axis, or `None` when the angle is numerically zero.
    pub fn axis(&self) -> Option<Vector3<T>> {
        let n = self.omega.norm();
        if n < cast(1e-12) {
            None
        } else {
            Some(self.omega / n)
        }
    }

    /// Exponential map (Rodrigues). Falls back to the second-order Taylor
    /// expansion below 1e-8 rad.
    pub fn exp(&self) -> Rotation<T> {
        let theta2 = self.omega.norm_squared();
        let omega_hat = skew(&self.omega);
        let (a, b) = if theta2 < cast(1e-16) {
            // sin θ / θ and (1 - cos θ)/θ² expanded to second order
            (
                T::one() - theta2 / cast(6.0),
                cast::<T>(0.5) - theta2 / cast(24.0),
            )
        } else {
            let theta = theta2.sqrt();
            (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
        };
        let m = Matrix3::identity() + omega_hat * a + omega_hat * omega_hat * b;
        Rotation { matrix: m }
    }
}
