//! Scenario generation: camera trajectory, odometry edges and per-frame
//! multi-hypothesis detections consistent with each object's symmetry group.

use nalgebra::Vector3;
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, PathSpec, ScenarioConfig, SymmetrySpec};
use super::sampler::{
    perturb_pose, sample_hypotheses, sample_occluded_discrete, HypothesisNoise,
};
use super::scene::{DetectionFrame, HypothesisSet, OdometryEdge, Scenario, SceneObject};
use crate::liegroup::{Pose, Rotation};
use crate::scalar::{cast, Real};
use crate::testutil::rng;

/// Camera pose at `position` looking at `target`, with +z forward and world
/// up resolving the roll.
pub fn look_at<T: Real>(position: &Vector3<T>, target: &Vector3<T>) -> Pose<T> {
    let forward = (target - position).normalize();
    let up = Vector3::z();
    let mut right = forward.cross(&up);
    if right.norm() < cast(1e-9) {
        right = forward.cross(&Vector3::x());
    }
    let right = right.normalize();
    let down = forward.cross(&right).normalize();
    let rot = nalgebra::Matrix3::from_columns(&[right, down, forward]);
    Pose::new(Rotation::from_matrix_unchecked(rot), *position)
}

fn rotation_from_rpy_deg<T: Real>(rpy: [f64; 3]) -> Rotation<T> {
    let [roll, pitch, yaw] = rpy.map(f64::to_radians);
    Rotation::from_axis_angle(&Vector3::z(), cast(yaw))
        .compose(&Rotation::from_axis_angle(&Vector3::y(), cast(pitch)))
        .compose(&Rotation::from_axis_angle(&Vector3::x(), cast(roll)))
}

fn vec3<T: Real>(v: [f64; 3]) -> Vector3<T> {
    Vector3::new(cast(v[0]), cast(v[1]), cast(v[2]))
}

/// True camera pose for each frame along the configured path.
pub fn camera_trajectory<T: Real>(config: &ScenarioConfig) -> Vec<Pose<T>> {
    let frames = config.trajectory.frames;
    match &config.trajectory.path {
        PathSpec::Orbit { center, radius, height } => {
            let center = vec3::<T>(*center);
            (0..frames)
                .map(|i| {
                    let angle = std::f64::consts::TAU * i as f64 / frames as f64;
                    let offset = Vector3::new(
                        cast::<T>(radius * angle.cos()),
                        cast::<T>(radius * angle.sin()),
                        cast::<T>(*height),
                    );
                    look_at(&(center + offset), &center)
                })
                .collect()
        }
        PathSpec::Waypoints { points, look_at: target } => {
            let target = vec3::<T>(*target);
            let pts: Vec<Vector3<T>> = points.iter().map(|p| vec3(*p)).collect();
            (0..frames)
                .map(|i| {
                    let t = i as f64 / (frames - 1).max(1) as f64 * (pts.len() - 1) as f64;
                    let seg = (t.floor() as usize).min(pts.len() - 2);
                    let alpha = cast::<T>(t - seg as f64);
                    let pos = pts[seg] * (T::one() - alpha) + pts[seg + 1] * alpha;
                    look_at(&pos, &target)
                })
                .collect()
        }
    }
}

/// Field-of-view cone and range visibility test for an object position given
/// in the camera frame.
pub fn is_visible<T: Real>(position_co: &Vector3<T>, fov_deg: f64, max_range: f64) -> bool {
    let range = position_co.norm();
    if range > cast(max_range) || position_co.z <= T::zero() {
        return false;
    }
    let cos_angle = position_co.z / range;
    cos_angle >= cast::<T>((fov_deg.to_radians() / 2.0).cos())
}

/// World bearing of the camera as seen from the object, used to lock the
/// symmetry mode presented by a partially occluded view.
fn camera_bearing<T: Real>(camera: &Pose<T>, object: &SceneObject<T>) -> f64 {
    let v = camera.translation - object.true_pose.translation;
    v.y.to_f64().unwrap_or(0.0).atan2(v.x.to_f64().unwrap_or(1.0))
}

fn detection_for_object<T: Real>(
    object: &SceneObject<T>,
    camera: &Pose<T>,
    occluded_frame: bool,
    config: &ScenarioConfig,
    stream: &mut ChaCha8Rng,
) -> Option<HypothesisSet<T>> {
    let true_relative = camera.inverse().compose(&object.true_pose);
    if !is_visible(&true_relative.translation, config.fov_deg, config.max_range) {
        return None;
    }
    let noise = HypothesisNoise {
        sigma_t: config.noise.det_sigma_t,
        sigma_r: config.noise.det_sigma_r_deg.to_radians(),
    };
    let hypotheses = match (occluded_frame, object.symmetry) {
        (true, SymmetrySpec::Discrete { fold }) => sample_occluded_discrete(
            &true_relative,
            fold,
            &object.axis_body,
            camera_bearing(camera, object),
            config.occlusion_position_bias,
            config.occlusion_yaw_bias_deg.to_radians(),
            noise,
            config.hypotheses,
            stream,
        ),
        (_, symmetry) => sample_hypotheses(
            &true_relative,
            symmetry,
            &object.axis_body,
            noise,
            config.hypotheses,
            stream,
        ),
    };
    Some(HypothesisSet {
        object_id_truth: object.id,
        class_label: object.class_label.clone(),
        hypotheses,
    })
}

/// Generate a full scenario. Deterministic for a fixed config and seed.
pub fn generate_scenario<T: Real>(config: &ScenarioConfig) -> Result<Scenario<T>, ConfigError> {
    config.validate()?;
    let objects: Vec<SceneObject<T>> = config
        .objects
        .iter()
        .map(|spec| SceneObject {
            id: spec.id,
            class_label: spec.class_label.clone(),
            true_pose: Pose::new(rotation_from_rpy_deg(spec.rpy_deg), vec3(spec.position)),
            symmetry: spec.symmetry,
            axis_body: vec3::<T>(spec.axis_body).normalize(),
        })
        .collect();

    let cameras = camera_trajectory::<T>(config);
    let mut stream = rng(config.seed);
    let mut frames = Vec::with_capacity(config.trajectory.frames);

    for (i, camera) in cameras.iter().enumerate() {
        let odometry = if i == 0 {
            None
        } else {
            let inflate = if config.in_featureless_arc(i) {
                config.noise.featureless_inflation
            } else {
                1.0
            };
            let sigma_t = config.noise.odom_sigma_t * inflate;
            let sigma_r = config.noise.odom_sigma_r_deg.to_radians() * inflate;
            let true_rel = cameras[i - 1].inverse().compose(camera);
            let noisy = perturb_pose(&true_rel, HypothesisNoise { sigma_t, sigma_r }, &mut stream);
            Some(OdometryEdge { relative: noisy, sigma_t: cast(sigma_t), sigma_r: cast(sigma_r) })
        };

        let occluded = config.in_occlusion_arc(i);
        let detections = objects
            .iter()
            .filter_map(|obj| detection_for_object(obj, camera, occluded, config, &mut stream))
            .collect();

        frames.push(DetectionFrame {
            frame_id: i,
            true_camera_pose: *camera,
            odometry,
            detections,
        });
    }

    Ok(Scenario { config: config.clone(), objects, frames })
}

/// Replace the hypothesis sets of discrete objects in `frame` with occluded
/// (single-mode) views when the frame falls inside an occlusion arc.
/// Frames outside every arc are returned unchanged.
pub fn occlusion_filter<T: Real>(
    mut frame: DetectionFrame<T>,
    objects: &[SceneObject<T>],
    config: &ScenarioConfig,
    stream: &mut ChaCha8Rng,
) -> DetectionFrame<T> {
    if !config.in_occlusion_arc(frame.frame_id) {
        return frame;
    }
    let noise = HypothesisNoise {
        sigma_t: config.noise.det_sigma_t,
        sigma_r: config.noise.det_sigma_r_deg.to_radians(),
    };
    for det in &mut frame.detections {
        let Some(obj) = objects.iter().find(|o| o.id == det.object_id_truth) else {
            continue;
        };
        if let SymmetrySpec::Discrete { fold } = obj.symmetry {
            let true_relative = frame.true_camera_pose.inverse().compose(&obj.true_pose);
            det.hypotheses = sample_occluded_discrete(
                &true_relative,
                fold,
                &obj.axis_body,
                camera_bearing(&frame.true_camera_pose, obj),
                config.occlusion_position_bias,
                config.occlusion_yaw_bias_deg.to_radians(),
                noise,
                det.hypotheses.len(),
                stream,
            );
        }
    }
    frame
}
