//! Runtime scenario data: ground truth objects, frames, detections.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SymmetrySpec};
use crate::liegroup::Pose;
use crate::scalar::Real;

/// Ground-truth object state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneObject<T: Real> {
    pub id: u32,
    pub class_label: String,
    /// World pose of the object, meters.
    pub true_pose: Pose<T>,
    pub symmetry: SymmetrySpec,
    /// Unit symmetry axis in the object body frame.
    pub axis_body: Vector3<T>,
}

impl<T: Real> SceneObject<T> {
    /// Symmetry axis expressed in world coordinates.
    pub fn axis_world(&self) -> Vector3<T> {
        self.true_pose.rotation.rotate(&self.axis_body)
    }
}

/// One multi-hypothesis detection: N candidate camera-to-object poses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisSet<T: Real> {
    /// Ground-truth object id, carried for evaluation only.
    pub object_id_truth: u32,
    pub class_label: String,
    pub hypotheses: Vec<Pose<T>>,
}

/// Relative camera motion measurement from the previous frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdometryEdge<T: Real> {
    pub relative: Pose<T>,
    /// Translation noise sigma used for this edge, meters.
    pub sigma_t: T,
    /// Rotation noise sigma used for this edge, radians.
    pub sigma_r: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionFrame<T: Real> {
    pub frame_id: usize,
    pub true_camera_pose: Pose<T>,
    /// Absent on the first frame.
    pub odometry: Option<OdometryEdge<T>>,
    pub detections: Vec<HypothesisSet<T>>,
}

/// A complete generated scenario: config echo, ground truth, frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario<T: Real> {
    pub config: ScenarioConfig,
    pub objects: Vec<SceneObject<T>>,
    pub frames: Vec<DetectionFrame<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn object(&self, id: u32) -> Option<&SceneObject<T>> {
        self.objects.iter().find(|o| o.id == id)
    }
}
