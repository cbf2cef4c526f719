//! World-frame warping of categorized detections and the symmetry-aware
//! match score.

use nalgebra::Vector3;

use crate::categorizer::{fold_angle, CategorizedDetection, SymmetryParams, SymmetryType};
use crate::liegroup::{canonical_axis_sign, Pose, Rotation};
use crate::scalar::{cast, wrap_to_circle, Real};

use super::{MapObject, ObjectParams};

/// Angle between two axis directions treated as unoriented lines, in
/// `[0, π/2]`.
pub fn axis_line_angle<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> T {
    let c = a.dot(b).abs() / (a.norm() * b.norm());
    c.min(T::one()).acos()
}

/// Oriented rotation angle of `rotation` about `axis`, folded to `[0, 2π)`.
pub fn rotation_angle_about<T: Real>(rotation: &Rotation<T>, axis: &Vector3<T>) -> T {
    fold_angle(&rotation.log(), axis)
}

/// One angle cluster of a detection, expressed in world coordinates.
#[derive(Debug, Clone)]
pub struct WorldCluster<T: Real> {
    /// Absolute rotation angle about the detection's world axis, `[0, 2π)`.
    pub angle_w: T,
    /// Hypothesis indices belonging to this cluster.
    pub members: Vec<usize>,
    /// Whether this cluster contains the reference hypothesis.
    pub is_reference: bool,
}

#[derive(Debug, Clone)]
pub enum WorldParams<T: Real> {
    Asymmetric { rotation_w: Rotation<T> },
    Discrete { axis_w: Vector3<T>, clusters: Vec<WorldCluster<T>> },
    Continuous { axis_w: Vector3<T> },
}

/// A categorized detection warped into world coordinates by the tracked
/// camera pose.
#[derive(Debug, Clone)]
pub struct WorldDetection<T: Real> {
    pub detection_index: usize,
    pub truth_id: u32,
    pub class_label: String,
    pub position_w: Vector3<T>,
    pub params: WorldParams<T>,
    /// Camera-to-object distance of this detection, meters (used for
    /// uncertainty-scaled gating).
    pub range: T,
    /// World-frame rotations of every raw hypothesis, for symmetry-agnostic
    /// best-hypothesis matching.
    pub hypothesis_rotations_w: Vec<Rotation<T>>,
}

impl<T: Real> WorldDetection<T> {
    pub fn symmetry_type(&self) -> SymmetryType {
        match &self.params {
            WorldParams::Asymmetric { .. } => SymmetryType::Asymmetric,
            WorldParams::Discrete { .. } => SymmetryType::Discrete,
            WorldParams::Continuous { .. } => SymmetryType::Continuous,
        }
    }

    pub fn axis_w(&self) -> Option<&Vector3<T>> {
        match &self.params {
            WorldParams::Discrete { axis_w, .. } | WorldParams::Continuous { axis_w } => {
                Some(axis_w)
            }
            WorldParams::Asymmetric { .. } => None,
        }
    }
}

/// Warp a categorized detection into world coordinates using the tracked
/// camera pose. The world axis is sign-canonicalized, and discrete angle
/// clusters become absolute angles about that axis.
pub fn warp_to_world<T: Real>(
    detection: &CategorizedDetection<T>,
    detection_index: usize,
    camera: &Pose<T>,
) -> WorldDetection<T> {
    let r_wc = &camera.rotation;
    let position_w = camera.transform_point(&detection.position_co);
    let hypothesis_rotations_w = detection
        .raw
        .hypotheses
        .iter()
        .map(|h| r_wc.compose(&h.rotation))
        .collect();

    let params = match &detection.params {
        SymmetryParams::Asymmetric { rotation_co } => {
            WorldParams::Asymmetric { rotation_w: r_wc.compose(rotation_co) }
        }
        SymmetryParams::Continuous { axis_co } => {
            WorldParams::Continuous { axis_w: canonical_axis_sign(&r_wc.rotate(axis_co)).0 }
        }
        SymmetryParams::Discrete { axis_co, angle_clusters } => {
            let axis_w = canonical_axis_sign(&r_wc.rotate(axis_co)).0;
            let reference = &detection.raw.hypotheses[0].rotation;
            let axis_body = reference.inverse().rotate(axis_co);
            let clusters = angle_clusters
                .iter()
                .map(|c| {
                    // representative rotation of the cluster in world frame
                    let spin = Rotation::from_axis_angle(&axis_body, c.representative);
                    let rot_w = r_wc.compose(&reference.compose(&spin));
                    WorldCluster {
                        angle_w: rotation_angle_about(&rot_w, &axis_w),
                        members: c.members.clone(),
                        is_reference: c.members.contains(&0),
                    }
                })
                .collect();
            WorldParams::Discrete { axis_w, clusters }
        }
    };

    WorldDetection {
        detection_index,
        truth_id: detection.raw.object_id_truth,
        class_label: detection.class_label.clone(),
        position_w,
        params,
        range: detection.position_co.norm(),
        hypothesis_rotations_w,
    }
}

/// Per-component match gates. `apply`d thresholds; a pair matches when every
/// applicable component ratio is at most 1.
#[derive(Debug, Clone, Copy)]
pub struct Gates<T: Real> {
    /// Position distance threshold, meters.
    pub tau_t: T,
    /// Axis line angle threshold, radians.
    pub tau_ax: T,
    /// Full-rotation distance threshold, radians.
    pub tau_r: T,
}

impl<T: Real> Gates<T> {
    pub fn from_f64(tau_t: f64, tau_ax: f64, tau_r: f64) -> Self {
        Gates { tau_t: cast(tau_t), tau_ax: cast(tau_ax), tau_r: cast(tau_r) }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MatchOutcome<T: Real> {
    /// Sum of component ratios; lower is better. Promotion candidates are
    /// penalized so full matches always rank first.
    pub score: T,
    /// Both sides asymmetric, 6-DoF failed but the shared parameters passed:
    /// matching promotes the map object to discrete symmetry.
    pub promote_to_discrete: bool,
}

/// Symmetry-aware match score between a world-frame detection and a map
/// object.
///
/// Same class required. If either side is symmetric the shared 5-DoF
/// parameters are compared (position, plus axis when both sides carry one);
/// if both are asymmetric the full 6-DoF distance is used, with the rotation
/// term minimized over `rotation_candidates` many-hypothesis sets.
pub fn match_score<T: Real>(
    detection: &WorldDetection<T>,
    rotation_candidates: &[Rotation<T>],
    object: &MapObject<T>,
    gates: &Gates<T>,
) -> Option<MatchOutcome<T>> {
    if detection.class_label != object.class_label {
        return None;
    }
    let position_ratio = (detection.position_w - object.position_w()).norm() / gates.tau_t;
    if position_ratio > T::one() {
        return None;
    }

    let det_axis = detection.axis_w();
    let obj_axis = object.axis_w_vector();
    let both_asym = det_axis.is_none()
        && matches!(object.params, ObjectParams::Asymmetric { .. });

    if both_asym {
        let map_rotation = match &object.params {
            ObjectParams::Asymmetric { pose_w } => &pose_w.rotation,
            _ => unreachable!(),
        };
        let rotation_ratio = rotation_candidates
            .iter()
            .map(|r| r.angle_to(map_rotation))
            .fold(T::max_value().unwrap(), T::min)
            / gates.tau_r;
        if rotation_ratio <= T::one() {
            return Some(MatchOutcome {
                score: position_ratio + rotation_ratio,
                promote_to_discrete: false,
            });
        }
        // 6-DoF failed on rotation alone: shared-parameter match, promote.
        return Some(MatchOutcome {
            score: position_ratio + cast(2.0),
            promote_to_discrete: true,
        });
    }

    // At least one side is symmetric: compare shared parameters only.
    let mut score = position_ratio;
    if let (Some(a), Some(b)) = (det_axis, obj_axis) {
        let axis_ratio = axis_line_angle(a, &b) / gates.tau_ax;
        if axis_ratio > T::one() {
            return None;
        }
        score += axis_ratio;
    }
    Some(MatchOutcome { score, promote_to_discrete: false })
}

/// Flip a world angle when the detection axis anti-aligns with the map axis:
/// angles are oriented quantities and follow the axis direction.
pub fn align_angle_to_axis<T: Real>(angle: T, det_axis: &Vector3<T>, map_axis: &Vector3<T>) -> T {
    if det_axis.dot(map_axis) < T::zero() {
        wrap_to_circle(T::two_pi() - angle)
    } else {
        angle
    }
}
