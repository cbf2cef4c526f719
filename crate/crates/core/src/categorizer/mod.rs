//! Classifies a multi-hypothesis detection into asymmetric / discrete /
//! continuous symmetry and extracts the unambiguous pose parameters of the
//! detected type.

mod dbscan;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dbscan::{cluster_angles, min_cluster_separation, AngleCluster};

use crate::liegroup::{canonical_axis_sign, AxisAngle, Rotation};
use crate::scalar::{cast, wrap_to_circle, Real};
use crate::sim::HypothesisSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CategorizeError {
    /// Every relative rotation is numerically zero; there is no axis to
    /// estimate and the set behaves as a single pose.
    #[error("hypothesis set carries no rotation dispersion")]
    NoRotationDispersion,
    /// DBSCAN labelled every angle as noise.
    #[error("angle clustering produced no clusters")]
    EmptyClustering,
}

/// Symmetry class of an object or detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryType {
    Asymmetric,
    Discrete,
    Continuous,
}

/// Thresholds of the three-stage categorization test. Angles in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CategorizerParams {
    /// Stage 1: below this maximum relative angle the set is unimodal.
    pub max_asym_angle: f64,
    /// DBSCAN neighborhood radius on the angle circle.
    pub dbscan_eps: f64,
    /// DBSCAN minimum neighborhood size for a core point.
    pub dbscan_min_pts: usize,
    /// Stage 3: minimum circular gap between adjacent cluster
    /// representatives for a discrete classification.
    pub min_cluster_gap: f64,
    /// Stage 3: maximum cluster count for a discrete classification.
    pub max_clusters: usize,
}

impl Default for CategorizerParams {
    fn default() -> Self {
        CategorizerParams {
            max_asym_angle: 15f64.to_radians(),
            dbscan_eps: 20f64.to_radians(),
            dbscan_min_pts: 2,
            min_cluster_gap: 45f64.to_radians(),
            max_clusters: 8,
        }
    }
}

/// Type-specific unambiguous parameters extracted from a hypothesis set.
///
/// Symmetric variants carry the axis expressed in the camera frame; the
/// discrete variant additionally carries the angle clusters relative to the
/// reference hypothesis.
#[derive(Debug, Clone)]
pub enum SymmetryParams<T: Real> {
    Asymmetric { rotation_co: Rotation<T> },
    Discrete { axis_co: Vector3<T>, angle_clusters: Vec<AngleCluster<T>> },
    Continuous { axis_co: Vector3<T> },
}

/// A categorized detection: symmetry type plus exactly the pose parameters
/// that type makes observable, together with the raw hypothesis set.
#[derive(Debug, Clone)]
pub struct CategorizedDetection<T: Real> {
    pub class_label: String,
    /// Mean hypothesis translation, camera frame.
    pub position_co: Vector3<T>,
    pub params: SymmetryParams<T>,
    pub raw: HypothesisSet<T>,
}

impl<T: Real> CategorizedDetection<T> {
    pub fn symmetry_type(&self) -> SymmetryType {
        match &self.params {
            SymmetryParams::Asymmetric { .. } => SymmetryType::Asymmetric,
            SymmetryParams::Discrete { .. } => SymmetryType::Discrete,
            SymmetryParams::Continuous { .. } => SymmetryType::Continuous,
        }
    }

    pub fn axis_co(&self) -> Option<&Vector3<T>> {
        match &self.params {
            SymmetryParams::Discrete { axis_co, .. }
            | SymmetryParams::Continuous { axis_co } => Some(axis_co),
            SymmetryParams::Asymmetric { .. } => None,
        }
    }
}

/// Rotations of hypotheses 2..N relative to the first hypothesis:
/// `ω_i = log(R_1ᵀ R_i)`.
pub fn relative_rotations<T: Real>(set: &HypothesisSet<T>) -> Vec<AxisAngle<T>> {
    let reference = set.hypotheses[0].rotation.inverse();
    set.hypotheses[1..]
        .iter()
        .map(|h| reference.compose(&h.rotation).log())
        .collect()
}

/// Axis of symmetry: the unit direction maximizing `‖[ω̄₁ … ω̄ₖ]ᵀ l‖₂`,
/// computed as the leading eigenvector of the second-moment matrix of the
/// unit rotation axes. Relative rotations below 1e-6 rad are excluded.
///
/// The sign is canonicalized so the largest-magnitude component is positive.
pub fn estimate_axis<T: Real>(relatives: &[AxisAngle<T>]) -> Result<Vector3<T>, CategorizeError> {
    let mut second_moment = Matrix3::<T>::zeros();
    let mut count = 0usize;
    for w in relatives {
        if let Some(axis) = w.axis() {
            if w.angle() > cast(1e-6) {
                second_moment += axis * axis.transpose();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(CategorizeError::NoRotationDispersion);
    }
    let eigen = nalgebra::SymmetricEigen::new(second_moment);
    let mut best = 0;
    for i in 1..3 {
        if eigen.eigenvalues[i] > eigen.eigenvalues[best] {
            best = i;
        }
    }
    let axis: Vector3<T> = eigen.eigenvectors.column(best).into();
    Ok(canonical_axis_sign(&axis.normalize()).0)
}

/// Camera-frame symmetry axis averaged over several reference hypotheses.
///
/// A single-reference estimate inherits half of the reference hypothesis's
/// own rotation noise as bias; re-estimating from spread references and
/// pooling the camera-frame directions cancels it. Rotations below
/// `min_angle` are ignored as axis-free noise.
pub fn estimate_axis_multi_reference<T: Real>(
    set: &HypothesisSet<T>,
    min_angle: T,
) -> Result<Vector3<T>, CategorizeError> {
    let n = set.hypotheses.len();
    let reference_count = n.min(8);
    let stride = n.div_ceil(reference_count);
    let mut second_moment = Matrix3::<T>::zeros();
    let mut any = false;
    for r in (0..n).step_by(stride.max(1)) {
        let reference = &set.hypotheses[r].rotation;
        let relatives: Vec<AxisAngle<T>> = set
            .hypotheses
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != r)
            .map(|(_, h)| reference.inverse().compose(&h.rotation).log())
            .filter(|w| w.angle() >= min_angle)
            .collect();
        if let Ok(body_axis) = estimate_axis(&relatives) {
            let camera_axis = reference.rotate(&body_axis);
            second_moment += camera_axis * camera_axis.transpose();
            any = true;
        }
    }
    if !any {
        return Err(CategorizeError::NoRotationDispersion);
    }
    let eigen = nalgebra::SymmetricEigen::new(second_moment);
    let mut best = 0;
    for i in 1..3 {
        if eigen.eigenvalues[i] > eigen.eigenvalues[best] {
            best = i;
        }
    }
    let axis: Vector3<T> = eigen.eigenvectors.column(best).into();
    Ok(canonical_axis_sign(&axis.normalize()).0)
}

/// Rotation angles about an oriented `axis`, in `[0, 2π)`. The magnitude is
/// `‖ω‖`; rotations whose axis anti-aligns with `axis` are folded to
/// `2π - ‖ω‖`. Angle 0 for the reference hypothesis is included first.
pub fn symmetry_angles<T: Real>(relatives: &[AxisAngle<T>], axis: &Vector3<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(relatives.len() + 1);
    out.push(T::zero());
    for w in relatives {
        out.push(fold_angle(w, axis));
    }
    out
}

/// Oriented angle of one rotation about `axis`, folded to `[0, 2π)`.
pub fn fold_angle<T: Real>(w: &AxisAngle<T>, axis: &Vector3<T>) -> T {
    let theta = w.angle();
    match w.axis() {
        Some(a) if a.dot(axis) < T::zero() => wrap_to_circle(T::two_pi() - theta),
        _ => wrap_to_circle(theta),
    }
}

/// Chirality-consistent rotation average via the quaternion eigenvector
/// method: leading eigenvector of `Σ qᵢ qᵢᵀ`.
pub fn average_rotation<'a, T: Real + 'a>(
    rotations: impl Iterator<Item = &'a Rotation<T>>,
) -> Rotation<T> {
    let mut accum = Matrix4::<T>::zeros();
    let mut any = false;
    for r in rotations {
        any = true;
        let na_rot = nalgebra::Rotation3::from_matrix_unchecked(*r.matrix());
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&na_rot);
        let c = q.coords; // (x, y, z, w)
        let v = Vector4::new(c.x, c.y, c.z, c.w);
        accum += v * v.transpose();
    }
    if !any {
        return Rotation::identity();
    }
    let eigen = nalgebra::SymmetricEigen::new(accum);
    let mut best = 0;
    for i in 1..4 {
        if eigen.eigenvalues[i] > eigen.eigenvalues[best] {
            best = i;
        }
    }
    let v = eigen.eigenvectors.column(best);
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        v[3], v[0], v[1], v[2],
    ));
    Rotation::from_matrix_unchecked(q.to_rotation_matrix().into_inner())
}

/// Three-stage symmetry-type decision.
///
/// 1. If the largest relative rotation angle stays below
///    `max_asym_angle`, the set is unimodal: asymmetric, represented by the
///    averaged rotation.
/// 2. Otherwise estimate the symmetry axis and cluster the rotation angles
///    about it.
/// 3. Few well-separated clusters mean discrete symmetry; a chain of
///    clusters around the circle means continuous symmetry.
pub fn categorize<T: Real>(
    set: &HypothesisSet<T>,
    params: &CategorizerParams,
) -> CategorizedDetection<T> {
    assert!(set.hypotheses.len() >= 2, "hypothesis set must have N >= 2");
    let position_co = set
        .hypotheses
        .iter()
        .fold(Vector3::zeros(), |acc, h| acc + h.translation)
        / cast::<T>(set.hypotheses.len() as f64);

    let relatives = relative_rotations(set);
    let theta_max = relatives.iter().map(|w| w.angle()).fold(T::zero(), T::max);

    let as_asymmetric = |set: &HypothesisSet<T>| CategorizedDetection {
        class_label: set.class_label.clone(),
        position_co,
        params: SymmetryParams::Asymmetric {
            rotation_co: average_rotation(set.hypotheses.iter().map(|h| &h.rotation)),
        },
        raw: set.clone(),
    };

    if theta_max < cast(params.max_asym_angle) {
        return as_asymmetric(set);
    }

    // Relative rotations at detector-noise scale have uniformly random axes
    // and only pollute the axis stack; the axis is estimated from the
    // rotations that actually separate symmetry modes.
    let axis_co = match estimate_axis_multi_reference(set, cast(params.max_asym_angle)) {
        Ok(axis) => axis,
        Err(_) => return as_asymmetric(set),
    };
    // body frame of the reference hypothesis, for angle folding
    let body_axis = set.hypotheses[0].rotation.inverse().rotate(&axis_co);

    let angles = symmetry_angles(&relatives, &body_axis);
    // member index i in `angles` corresponds to hypothesis i (index 0 is the
    // reference hypothesis at angle 0)
    let clusters = match cluster_angles(&angles, cast(params.dbscan_eps), params.dbscan_min_pts) {
        Ok(c) => c,
        Err(_) => return as_asymmetric(set),
    };

    let gap = min_cluster_separation(&clusters, &angles);
    if gap > cast(params.min_cluster_gap) && clusters.len() <= params.max_clusters {
        CategorizedDetection {
            class_label: set.class_label.clone(),
            position_co,
            params: SymmetryParams::Discrete { axis_co, angle_clusters: clusters },
            raw: set.clone(),
        }
    } else {
        CategorizedDetection {
            class_label: set.class_label.clone(),
            position_co,
            params: SymmetryParams::Continuous { axis_co },
            raw: set.clone(),
        }
    }
}
