//! Synthetic detection simulator: scenes, camera trajectories, odometry
//! measurements and per-frame N-hypothesis detections consistent with each
//! object's ground-truth symmetry group.

mod config;
mod generate;
mod io;
mod sampler;
mod scene;

pub use config::{
    ConfigError, NoiseModel, ObjectSpec, PathSpec, ScenarioConfig, SymmetrySpec, TrajectorySpec,
};
pub use generate::{camera_trajectory, generate_scenario, is_visible, look_at, occlusion_filter};
pub use io::ScenarioIoError;
pub use sampler::{perturb_pose, sample_hypotheses, sample_occluded_discrete, symmetric_pose, HypothesisNoise};
pub use scene::{DetectionFrame, HypothesisSet, OdometryEdge, Scenario, SceneObject};
