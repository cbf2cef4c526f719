//! Scenario configuration: JSON-facing structs and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("hypothesis count must be >= 2, got {0}")]
    TooFewHypotheses(usize),
    #[error("noise sigma `{name}` must be non-negative, got {value}")]
    NegativeSigma { name: &'static str, value: f64 },
    #[error("frame arc [{0}, {1}] out of range (frames: {2})")]
    ArcOutOfRange(usize, usize, usize),
    #[error("object {id}: discrete fold count must be >= 2, got {fold}")]
    BadFoldCount { id: u32, fold: u32 },
    #[error("object {id}: symmetry axis must be nonzero")]
    ZeroAxis { id: u32 },
    #[error("duplicate object id {0}")]
    DuplicateObjectId(u32),
    #[error("orbit radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("waypoint path needs at least 2 points")]
    TooFewWaypoints,
}

/// Symmetry class of a scene object, ground truth side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SymmetrySpec {
    Asymmetric,
    Discrete { fold: u32 },
    Continuous,
}

/// One simulated object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: u32,
    pub class_label: String,
    /// World position of the object origin, meters.
    pub position: [f64; 3],
    /// Orientation as roll/pitch/yaw in degrees (applied z·y·x).
    #[serde(default)]
    pub rpy_deg: [f64; 3],
    pub symmetry: SymmetrySpec,
    /// Symmetry axis in the object body frame (also used to orient
    /// discrete/continuous sampling). Unit length after validation.
    #[serde(default = "default_axis")]
    pub axis_body: [f64; 3],
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Camera path shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    /// Circle around `center` at `radius`, camera looking at the center.
    Orbit { center: [f64; 3], radius: f64, height: f64 },
    /// Piecewise-linear path through `points`, camera looking at `look_at`.
    Waypoints { points: Vec<[f64; 3]>, look_at: [f64; 3] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub path: PathSpec,
    pub frames: usize,
    /// Frame-index intervals (inclusive) where odometry noise is inflated.
    #[serde(default)]
    pub featureless_arcs: Vec<[usize; 2]>,
}

/// Noise magnitudes. Rotation sigmas in degrees in the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Detector translation noise per hypothesis, meters.
    pub det_sigma_t: f64,
    /// Detector rotation noise per hypothesis, degrees.
    pub det_sigma_r_deg: f64,
    /// Odometry translation noise per edge, meters.
    pub odom_sigma_t: f64,
    /// Odometry rotation noise per edge, degrees.
    pub odom_sigma_r_deg: f64,
    /// Multiplier applied to odometry sigmas inside featureless arcs.
    pub featureless_inflation: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            det_sigma_t: 0.03,
            det_sigma_r_deg: 2.0,
            odom_sigma_t: 0.01,
            odom_sigma_r_deg: 0.5,
            featureless_inflation: 20.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Hypotheses per detection (N).
    #[serde(default = "default_hypotheses")]
    pub hypotheses: usize,
    pub trajectory: TrajectorySpec,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Frame-index intervals where discrete objects present a partially
    /// occluded, unimodal view.
    #[serde(default)]
    pub occlusion_arcs: Vec<[usize; 2]>,
    /// Position bias of occluded views, meters: the visible part's centroid
    /// shifts toward the camera along the line of sight.
    #[serde(default = "default_occlusion_bias")]
    pub occlusion_position_bias: f64,
    /// Orientation bias of occluded views, degrees: the visible part
    /// resembles an object rotated off the true symmetry mode.
    #[serde(default = "default_occlusion_yaw_bias")]
    pub occlusion_yaw_bias_deg: f64,
    /// Categorizer thresholds to use when processing this scenario;
    /// pipeline defaults apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categorizer: Option<crate::categorizer::CategorizerParams>,
    #[serde(default = "default_fov")]
    pub fov_deg: f64,
    #[serde(default = "default_range")]
    pub max_range: f64,
}

fn default_hypotheses() -> usize {
    30
}
fn default_occlusion_bias() -> f64 {
    0.4
}
fn default_occlusion_yaw_bias() -> f64 {
    40.0
}
fn default_fov() -> f64 {
    90.0
}
fn default_range() -> f64 {
    12.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let frames = self.trajectory.frames;
        if frames < 2 {
            return Err(ConfigError::TooFewFrames(frames));
        }
        if self.hypotheses < 2 {
            return Err(ConfigError::TooFewHypotheses(self.hypotheses));
        }
        for (name, value) in [
            ("det_sigma_t", self.noise.det_sigma_t),
            ("det_sigma_r_deg", self.noise.det_sigma_r_deg),
            ("odom_sigma_t", self.noise.odom_sigma_t),
            ("odom_sigma_r_deg", self.noise.odom_sigma_r_deg),
            ("featureless_inflation", self.noise.featureless_inflation),
        ] {
            if value < 0.0 || !value.is_finite() {
                return Err(ConfigError::NegativeSigma { name, value });
            }
        }
        for arc in self.trajectory.featureless_arcs.iter().chain(&self.occlusion_arcs) {
            if arc[0] > arc[1] || arc[1] >= frames {
                return Err(ConfigError::ArcOutOfRange(arc[0], arc[1], frames));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for obj in &self.objects {
            if !seen.insert(obj.id) {
                return Err(ConfigError::DuplicateObjectId(obj.id));
            }
            if let SymmetrySpec::Discrete { fold } = obj.symmetry {
                if fold < 2 {
                    return Err(ConfigError::BadFoldCount { id: obj.id, fold });
                }
            }
            let a = obj.axis_body;
            if (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt() < 1e-9 {
                return Err(ConfigError::ZeroAxis { id: obj.id });
            }
        }
        match &self.trajectory.path {
            PathSpec::Orbit { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(ConfigError::BadRadius(*radius));
                }
            }
            PathSpec::Waypoints { points, .. } => {
                if points.len() < 2 {
                    return Err(ConfigError::TooFewWaypoints);
                }
            }
        }
        Ok(())
    }

    /// Characteristic scene scale: orbit radius, or the maximum waypoint
    /// distance from the path centroid.
    pub fn scene_scale(&self) -> f64 {
        match &self.trajectory.path {
            PathSpec::Orbit { radius, .. } => *radius,
            PathSpec::Waypoints { points, .. } => {
                let n = points.len() as f64;
                let centroid = points.iter().fold([0.0; 3], |acc, p| {
                    [acc[0] + p[0] / n, acc[1] + p[1] / n, acc[2] + p[2] / n]
                });
                points
                    .iter()
                    .map(|p| {
                        ((p[0] - centroid[0]).powi(2)
                            + (p[1] - centroid[1]).powi(2)
                            + (p[2] - centroid[2]).powi(2))
                        .sqrt()
                    })
                    .fold(1.0, f64::max)
            }
        }
    }

    pub fn in_featureless_arc(&self, frame: usize) -> bool {
        self.trajectory.featureless_arcs.iter().any(|a| frame >= a[0] && frame <= a[1])
    }

    pub fn in_occlusion_arc(&self, frame: usize) -> bool {
        self.occlusion_arcs.iter().any(|a| frame >= a[0] && frame <= a[1])
    }
}
