//! Run metrics: trajectory RMSE, symmetry-aware object errors and object
//! tracking statistics.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use symslam_core::association::{axis_line_angle, MapObject, ObjectMap, ObjectParams};
use symslam_core::liegroup::Pose;
use symslam_core::sim::{Scenario, SceneObject, SymmetrySpec};

/// FNV-1a over the scenario dump text, printed as hex. Ties reports to the
/// exact scenario they were computed from.
pub fn scenario_digest(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FailureInfo {
    pub frame: usize,
    pub reason: String,
}

/// Per-frame error row. Object errors are keyed by ground-truth object id
/// and refer to the primary (most-observed) map object of that truth id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub camera_error_t: f64,
    pub object_errors_t: BTreeMap<u32, f64>,
    pub informative_object_edges: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario_digest: String,
    pub pipeline: String,
    pub mode: String,
    pub seed: u64,
    /// RMSE over keyframe camera positions, absent when no frame was
    /// estimated.
    pub camera_rmse_t: Option<f64>,
    /// Position RMSE of the primary map object per ground-truth object id,
    /// over the frames after its first registration.
    pub object_rmse_t: BTreeMap<u32, f64>,
    /// Number of distinct map objects ever associated to each ground-truth
    /// object.
    pub tracking_events: BTreeMap<u32, usize>,
    pub failed: Option<FailureInfo>,
    pub missing_frames: Vec<usize>,
    pub per_frame: Vec<FrameMetrics>,
}

/// Position plus symmetry-aware orientation error between a ground-truth
/// object and a map object estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ObjectError {
    pub position: f64,
    /// Axis line angle, for symmetric ground truth with an estimated axis.
    pub axis: Option<f64>,
    /// Full rotation geodesic distance, for asymmetric pairs only.
    pub rotation: Option<f64>,
}

pub fn object_error(truth: &SceneObject<f64>, estimate: &MapObject<f64>) -> ObjectError {
    let position = (estimate.position_w() - truth.true_pose.translation).norm();
    let truth_symmetric = !matches!(truth.symmetry, SymmetrySpec::Asymmetric);
    let axis = if truth_symmetric {
        estimate
            .axis_w_vector()
            .map(|a| axis_line_angle(&a, &truth.axis_world()))
    } else {
        None
    };
    let rotation = match (&truth.symmetry, &estimate.params) {
        (SymmetrySpec::Asymmetric, ObjectParams::Asymmetric { pose_w }) => {
            Some(truth.true_pose.rotation.angle_to(&pose_w.rotation))
        }
        _ => None,
    };
    ObjectError { position, axis, rotation }
}

/// Map objects ever associated to each ground-truth id.
pub fn tracking_events(map: &ObjectMap<f64>) -> BTreeMap<u32, usize> {
    let mut seen: BTreeMap<u32, std::collections::BTreeSet<u32>> = BTreeMap::new();
    for obj in map.objects() {
        for obs in &obj.observations {
            seen.entry(obs.truth_id).or_default().insert(obj.id);
        }
    }
    seen.into_iter().map(|(truth, ids)| (truth, ids.len())).collect()
}

/// Primary map object of each ground-truth id: the one with the most
/// observations of it (ties to the lowest id).
pub fn primary_objects(map: &ObjectMap<f64>) -> BTreeMap<u32, u32> {
    let mut counts: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
    for obj in map.objects() {
        for obs in &obj.observations {
            *counts.entry(obs.truth_id).or_default().entry(obj.id).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(truth, by_obj)| {
            let best = by_obj
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(id, _)| id)
                .expect("non-empty observation counts");
            (truth, best)
        })
        .collect()
}

/// Assemble the report from estimated keyframe poses, the final map and the
/// per-frame rows collected during the run.
pub fn compute_metrics(
    scenario: &Scenario<f64>,
    digest: &str,
    pipeline: &str,
    mode: &str,
    estimates: &BTreeMap<usize, Pose<f64>>,
    map: &ObjectMap<f64>,
    per_frame: Vec<FrameMetrics>,
    failed: Option<FailureInfo>,
) -> MetricsReport {
    let mut missing = Vec::new();
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for frame in &scenario.frames {
        match estimates.get(&frame.frame_id) {
            Some(est) => {
                sq_sum += (est.translation - frame.true_camera_pose.translation).norm_squared();
                count += 1;
            }
            None => missing.push(frame.frame_id),
        }
    }
    let camera_rmse_t = (count > 0).then(|| (sq_sum / count as f64).sqrt());

    let mut object_rmse_t = BTreeMap::new();
    for truth in &scenario.objects {
        let series: Vec<f64> = per_frame
            .iter()
            .filter_map(|row| row.object_errors_t.get(&truth.id).copied())
            .collect();
        if !series.is_empty() {
            let rmse =
                (series.iter().map(|e| e * e).sum::<f64>() / series.len() as f64).sqrt();
            object_rmse_t.insert(truth.id, rmse);
        }
    }

    MetricsReport {
        scenario_digest: digest.to_string(),
        pipeline: pipeline.to_string(),
        mode: mode.to_string(),
        seed: scenario.config.seed,
        camera_rmse_t,
        object_rmse_t,
        tracking_events: tracking_events(map),
        failed,
        missing_frames: missing,
        per_frame,
    }
}

/// Trajectory table: `frame,est_x,est_y,est_z,true_x,true_y,true_z,error_t`.
pub fn trajectory_csv(
    scenario: &Scenario<f64>,
    estimates: &BTreeMap<usize, Pose<f64>>,
) -> String {
    let mut out = String::from("frame,est_x,est_y,est_z,true_x,true_y,true_z,error_t\n");
    for frame in &scenario.frames {
        if let Some(est) = estimates.get(&frame.frame_id) {
            let t = est.translation;
            let gt = frame.true_camera_pose.translation;
            out.push_str(&format!(
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                frame.frame_id,
                t.x,
                t.y,
                t.z,
                gt.x,
                gt.y,
                gt.z,
                (t - gt).norm()
            ));
        }
    }
    out
}

/// Parse the estimate columns back out of a trajectory CSV.
pub fn parse_trajectory_csv(text: &str) -> anyhow::Result<BTreeMap<usize, Vector3<f64>>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 4 {
            anyhow::bail!("trajectory csv line {}: expected >=4 columns", i + 1);
        }
        let frame: usize = cols[0].parse()?;
        let v = Vector3::new(cols[1].parse()?, cols[2].parse()?, cols[3].parse()?);
        out.insert(frame, v);
    }
    Ok(out)
}
