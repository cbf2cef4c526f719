//! End-to-end pipeline runner: per keyframe, categorize detections,
//! associate them against the object map, and jointly optimize the windowed
//! factor graph. The symmetry-agnostic baselines share the same machinery
//! with 6-DoF association and asymmetric-style edges.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use symslam_core::association::{
    axis_line_angle, warp_to_world, AssociationParams, Gates, MatchPolicy, MatchRecord,
    ObjectMap, ObjectParams, Registration, WorldCluster, WorldDetection, WorldParams,
};
use symslam_core::categorizer::{categorize, CategorizerParams, SymmetryParams};
use symslam_core::liegroup::{Pose, Rotation};
use symslam_core::optimizer::{
    optimize, windowed_solve, Edge, GraphState, NodeKey, ObjectNode, SolveParams, SolveReport,
};
use symslam_core::scalar::circular_distance;
use symslam_core::sim::{DetectionFrame, HypothesisSet, Scenario};

use crate::metrics::{
    compute_metrics, scenario_digest, FailureInfo, FrameMetrics, MetricsReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    /// Symmetry-aware association and per-type object edges.
    Proposed,
    /// Single-hypothesis detections, 6-DoF association, single-component
    /// edges.
    Sh,
    /// All hypotheses, 6-DoF association on the best hypothesis,
    /// asymmetric-style max-mixture edges regardless of symmetry.
    Mh,
}

impl PipelineKind {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineKind::Proposed => "proposed",
            PipelineKind::Sh => "sh",
            PipelineKind::Mh => "mh",
        }
    }
}

impl std::fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Cameras estimated jointly with objects from odometry + object edges.
    FullSlam,
    /// Cameras fixed at ground truth; only object edges are optimized.
    CaseStudy,
}

impl RunMode {
    pub fn name(&self) -> &'static str {
        match self {
            RunMode::FullSlam => "full-slam",
            RunMode::CaseStudy => "case-study",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub categorizer: CategorizerParams,
    pub association: AssociationParams,
    pub solver: SolveParams,
    /// Sliding window size (camera nodes optimized per keyframe).
    pub window: usize,
    /// Axis-term weight of continuous object edges.
    pub gamma: f64,
    /// Observations before an object is considered established and starts
    /// contributing optimizer edges.
    pub min_obs_for_edges: usize,
    /// Consecutive consistent observations required before an unmatched
    /// detection is instantiated as a new map object.
    pub candidate_confirm_obs: usize,
    /// Widen the position/axis association gates by the propagated odometry
    /// uncertainty (full-SLAM mode only). The orientation-agreement gate
    /// stays fixed.
    pub adaptive_gating: bool,
    /// Run failure: camera translation error beyond this multiple of the
    /// scene scale.
    pub failure_radius_multiplier: f64,
    /// Run failure: this many consecutive frames with detections but no
    /// association to an established object.
    pub failure_zero_edge_frames: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            categorizer: CategorizerParams::default(),
            association: AssociationParams::default(),
            solver: SolveParams::default(),
            window: 8,
            gamma: 1.0,
            min_obs_for_edges: 3,
            candidate_confirm_obs: 2,
            adaptive_gating: true,
            failure_radius_multiplier: 10.0,
            failure_zero_edge_frames: 10,
        }
    }
}

/// Everything a finished run writes to its output directory.
pub struct RunOutput {
    pub metrics: MetricsReport,
    pub trajectory_csv: String,
    pub map_json: serde_json::Value,
    pub solver_report_csv: String,
    pub graph_json: serde_json::Value,
}

/// Raw geometry of one associated detection, kept so graph construction can
/// re-derive edges when an object's symmetry type changes later.
struct ObjectEdgeRecord {
    frame: usize,
    object: u32,
    /// Object type epoch at association time; stale records are re-bound.
    epoch: u32,
    payload: RecordPayload,
}

enum RecordPayload {
    /// Detection carried a full 6-DoF pose (asymmetric categorization or a
    /// baseline detection).
    FullPose { hypotheses: Vec<Pose<f64>>, rotation_co: Rotation<f64>, angle_index: Option<usize> },
    /// Discrete categorization: hypotheses grouped by angle cluster.
    Clustered { axis_co: Vector3<f64>, clusters: Vec<ClusterRecord> },
    /// Continuous categorization: axis plus per-hypothesis translations.
    AxisOnly { axis_co: Vector3<f64>, hypotheses: Vec<Pose<f64>> },
}

struct ClusterRecord {
    hypotheses: Vec<Pose<f64>>,
    rotation_co: Rotation<f64>,
    angle_index: usize,
}

impl RecordPayload {
    fn all_hypotheses(&self) -> Vec<Pose<f64>> {
        match self {
            RecordPayload::FullPose { hypotheses, .. }
            | RecordPayload::AxisOnly { hypotheses, .. } => hypotheses.clone(),
            RecordPayload::Clustered { clusters, .. } => {
                clusters.iter().flat_map(|c| c.hypotheses.iter().copied()).collect()
            }
        }
    }
}

struct EdgeWeights {
    t: f64,
    r: f64,
}

fn whitening(sigma_t: f64, sigma_r: f64) -> EdgeWeights {
    EdgeWeights { t: 1.0 / sigma_t.max(1e-3), r: 1.0 / sigma_r.max(1e-3) }
}

/// Nearest symmetric angle of `angles` to the world angle of `rotation_w`
/// about the object's axis.
fn bind_angle(rotation_w: &Rotation<f64>, axis_w: &Vector3<f64>, angles: &[f64]) -> usize {
    let world_angle = symslam_core::association::rotation_angle_about(rotation_w, axis_w);
    angles
        .iter()
        .enumerate()
        .min_by(|a, b| {
            circular_distance(*a.1, world_angle)
                .partial_cmp(&circular_distance(*b.1, world_angle))
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Unconfirmed new-object hypothesis: registered only after enough
/// consecutive consistent observations.
struct Candidate {
    world: WorldDetection<f64>,
    streak: usize,
}

struct Session<'a> {
    scenario: &'a Scenario<f64>,
    params: &'a PipelineParams,
    kind: PipelineKind,
    mode: RunMode,
    cameras_est: BTreeMap<usize, Pose<f64>>,
    map: ObjectMap<f64>,
    records: Vec<ObjectEdgeRecord>,
    odometry: Vec<Edge<f64>>,
    epochs: BTreeMap<u32, u32>,
    det_weights: EdgeWeights,
    candidates: Vec<Candidate>,
    zero_edge_streak: usize,
    failed: Option<FailureInfo>,
    per_frame: Vec<FrameMetrics>,
    last_report: Option<SolveReport>,
}

/// Consistency test between a detection and a pending candidate, on the
/// strict base gates: a permanent landmark requires agreement that doesn't
/// lean on the current odometry uncertainty.
fn candidate_consistent(
    det: &WorldDetection<f64>,
    candidate: &WorldDetection<f64>,
    gates: &Gates<f64>,
) -> bool {
    if det.class_label != candidate.class_label {
        return false;
    }
    if (det.position_w - candidate.position_w).norm() > gates.tau_t {
        return false;
    }
    match (&det.params, &candidate.params) {
        (
            WorldParams::Asymmetric { rotation_w: a },
            WorldParams::Asymmetric { rotation_w: b },
        ) => a.angle_to(b) <= gates.tau_r,
        (da, db) => {
            let (axis_a, axis_b) = (
                match da {
                    WorldParams::Discrete { axis_w, .. }
                    | WorldParams::Continuous { axis_w } => Some(axis_w),
                    WorldParams::Asymmetric { .. } => None,
                },
                match db {
                    WorldParams::Discrete { axis_w, .. }
                    | WorldParams::Continuous { axis_w } => Some(axis_w),
                    WorldParams::Asymmetric { .. } => None,
                },
            );
            match (axis_a, axis_b) {
                (Some(a), Some(b)) => axis_line_angle(a, b) <= gates.tau_ax,
                _ => true,
            }
        }
    }
}

impl<'a> Session<'a> {
    fn new(
        scenario: &'a Scenario<f64>,
        kind: PipelineKind,
        mode: RunMode,
        params: &'a PipelineParams,
    ) -> Self {
        let noise = &scenario.config.noise;
        Session {
            scenario,
            params,
            kind,
            mode,
            cameras_est: BTreeMap::new(),
            map: ObjectMap::new(params.association.clone()),
            records: Vec::new(),
            odometry: Vec::new(),
            epochs: BTreeMap::new(),
            det_weights: whitening(noise.det_sigma_t, noise.det_sigma_r_deg.to_radians()),
            candidates: Vec::new(),
            zero_edge_streak: 0,
            failed: None,
            per_frame: Vec::new(),
            last_report: None,
        }
    }

    /// Detections of one frame as world detections under the pipeline's
    /// observation model.
    fn world_detections(
        &self,
        frame: &DetectionFrame<f64>,
        camera: &Pose<f64>,
    ) -> Vec<(WorldDetection<f64>, RecordPayload)> {
        frame
            .detections
            .iter()
            .enumerate()
            .map(|(index, set)| match self.kind {
                PipelineKind::Proposed => {
                    // scenario files may carry their own categorizer thresholds
                    let categorizer_params = self
                        .scenario
                        .config
                        .categorizer
                        .as_ref()
                        .unwrap_or(&self.params.categorizer);
                    let det = categorize(set, categorizer_params);
                    let world = warp_to_world(&det, index, camera);
                    let payload = payload_from_categorized(&det, &world);
                    (world, payload)
                }
                PipelineKind::Sh => {
                    let first = set.hypotheses[0];
                    let world = baseline_world(set, &[first], index, camera);
                    let payload = RecordPayload::FullPose {
                        hypotheses: vec![first],
                        rotation_co: first.rotation,
                        angle_index: None,
                    };
                    (world, payload)
                }
                PipelineKind::Mh => {
                    let world = baseline_world(set, &set.hypotheses, index, camera);
                    let payload = RecordPayload::FullPose {
                        hypotheses: set.hypotheses.clone(),
                        rotation_co: set.hypotheses[0].rotation,
                        angle_index: None,
                    };
                    (world, payload)
                }
            })
            .collect()
    }

    fn gates(&self, frame: &DetectionFrame<f64>, detection_range: f64) -> Gates<f64> {
        let a = &self.params.association;
        let mut gates = Gates::from_f64(a.tau_t, a.tau_ax, a.tau_r);
        if self.params.adaptive_gating && self.mode == RunMode::FullSlam {
            if let Some(odom) = &frame.odometry {
                // one propagation step of odometry uncertainty; the warped
                // position absorbs the rotational part levered by range.
                // Orientation agreement (tau_r) is a fixed detector-vs-map
                // consistency test and is not widened.
                gates.tau_t += 3.0 * (odom.sigma_t + detection_range * odom.sigma_r);
                gates.tau_ax += 3.0 * odom.sigma_r;
            }
        }
        gates
    }

    fn base_gates(&self) -> Gates<f64> {
        let a = &self.params.association;
        Gates::from_f64(a.tau_t, a.tau_ax, a.tau_r)
    }

    fn run(&mut self) {
        let scale = self.scenario.config.scene_scale();
        for frame in &self.scenario.frames {
            let camera = self.propagate_camera(frame);
            self.cameras_est.insert(frame.frame_id, camera);

            let world = self.world_detections(frame, &camera);
            let max_range =
                world.iter().map(|(w, _)| w.range).fold(0.0, f64::max).max(scale);
            let gates = self.gates(frame, max_range);
            let detections: Vec<WorldDetection<f64>> =
                world.iter().map(|(w, _)| w.clone()).collect();
            let policy = match self.kind {
                PipelineKind::Proposed => MatchPolicy::SymmetryAware,
                _ => MatchPolicy::SymmetryAgnostic,
            };

            let pre_counts: BTreeMap<u32, usize> =
                self.map.objects().map(|o| (o.id, o.observations.len())).collect();
            let result = self.map.associate_world(
                &detections,
                frame.frame_id,
                &gates,
                policy,
                Registration::Deferred,
            );
            for &id in &result.promotions {
                *self.epochs.entry(id).or_insert(0) += 1;
            }

            // ground-truth object -> map object the pipeline currently
            // tracks it as, for the error series
            let mut active: BTreeMap<u32, u32> = BTreeMap::new();
            let mut informative = 0usize;
            for m in &result.matches {
                let established = pre_counts
                    .get(&m.object_id)
                    .is_some_and(|&c| c >= self.params.min_obs_for_edges);
                if established {
                    informative += 1;
                }
                let (w, payload) = &world[m.detection_index];
                active.insert(w.truth_id, m.object_id);
                self.records.push(ObjectEdgeRecord {
                    frame: frame.frame_id,
                    object: m.object_id,
                    epoch: self.epochs.get(&m.object_id).copied().unwrap_or(0),
                    payload: rebound_payload(payload, m),
                });
            }
            self.confirm_candidates(&world, &result.unmatched, frame.frame_id, &mut active);

            if self.mode == RunMode::FullSlam {
                if let Some(odom) = &frame.odometry {
                    let w = whitening(odom.sigma_t, odom.sigma_r);
                    self.odometry.push(Edge::Odometry {
                        from: frame.frame_id - 1,
                        to: frame.frame_id,
                        measurement: odom.relative,
                        weight_t: w.t,
                        weight_r: w.r,
                    });
                }
            }

            self.solve(frame.frame_id);
            self.record_frame(frame, informative, scale, &active);
        }
    }

    /// Track unmatched detections as pending candidates; instantiate a map
    /// object once one has been seen consistently often enough.
    fn confirm_candidates(
        &mut self,
        world: &[(WorldDetection<f64>, RecordPayload)],
        unmatched: &[usize],
        frame_id: usize,
        active: &mut BTreeMap<u32, u32>,
    ) {
        let gates = self.base_gates();
        let mut next: Vec<Candidate> = Vec::new();
        for &index in unmatched {
            let (det, _) = &world[index];
            let slot = self
                .candidates
                .iter()
                .position(|c| candidate_consistent(det, &c.world, &gates));
            let streak = match slot {
                Some(i) => self.candidates.swap_remove(i).streak + 1,
                None => 1,
            };
            if streak >= self.params.candidate_confirm_obs {
                let id = self.map.register_new(det, frame_id);
                active.insert(det.truth_id, id);
            } else {
                next.push(Candidate { world: det.clone(), streak });
            }
        }
        // candidates not re-observed this frame are dropped
        self.candidates = next;
    }

    fn propagate_camera(&self, frame: &DetectionFrame<f64>) -> Pose<f64> {
        match self.mode {
            RunMode::CaseStudy => frame.true_camera_pose,
            RunMode::FullSlam => {
                if frame.frame_id == 0 {
                    frame.true_camera_pose
                } else {
                    let previous = self.cameras_est[&(frame.frame_id - 1)];
                    match &frame.odometry {
                        Some(odom) => previous.compose(&odom.relative),
                        None => previous,
                    }
                }
            }
        }
    }

    /// Build the factor graph from the session and solve it.
    fn solve(&mut self, _current_frame: usize) {
        let mut state = GraphState::new();
        for (&id, pose) in &self.cameras_est {
            state.cameras.insert(id, *pose);
        }
        match self.mode {
            RunMode::CaseStudy => {
                let ids: Vec<usize> = state.cameras.keys().copied().collect();
                for id in ids {
                    state.fixed.insert(NodeKey::Camera(id));
                }
            }
            RunMode::FullSlam => {
                if let Some(&first) = state.cameras.keys().next() {
                    state.fixed.insert(NodeKey::Camera(first));
                }
            }
        }

        let mut edges: Vec<Edge<f64>> = Vec::new();
        if self.mode == RunMode::FullSlam {
            edges.extend(self.odometry.iter().cloned());
        }
        for record in &self.records {
            let object = match self.map.get(record.object) {
                Some(o) if o.observations.len() >= self.params.min_obs_for_edges => o,
                _ => continue,
            };
            if !state.objects.contains_key(&record.object) {
                state
                    .objects
                    .insert(record.object, ObjectNode::from_object_params(&object.params));
            }
            let camera_est = self.cameras_est[&record.frame];
            let fresh = record.epoch == self.epochs.get(&record.object).copied().unwrap_or(0);
            self.record_to_edges(record, &object.params, &camera_est, fresh, &mut edges);
        }

        if edges.is_empty() || state.cameras.is_empty() {
            return;
        }
        let result = match self.mode {
            RunMode::CaseStudy => optimize(&mut state, &edges, &self.params.solver),
            RunMode::FullSlam => {
                windowed_solve(&mut state, &edges, self.params.window, &self.params.solver)
            }
        };
        match result {
            Ok(report) => {
                for (&id, pose) in &state.cameras {
                    self.cameras_est.insert(id, *pose);
                }
                let object_ids: Vec<u32> = state.objects.keys().copied().collect();
                for id in object_ids {
                    self.map.set_params(id, state.objects[&id].to_object_params());
                }
                self.last_report = Some(report);
            }
            Err(err) => {
                // a solver abort is a failed run, not a crash
                if self.failed.is_none() {
                    self.failed = Some(FailureInfo {
                        frame: _current_frame,
                        reason: format!("solver abort: {err}"),
                    });
                }
            }
        }
    }

    /// Derive optimizer edges from one stored observation, honoring the
    /// object's *current* symmetry type. Discrete observations emit one edge
    /// per associated angle (Eq.-style max-mixture per symmetric pose).
    fn record_to_edges(
        &self,
        record: &ObjectEdgeRecord,
        params: &ObjectParams<f64>,
        camera_est: &Pose<f64>,
        fresh: bool,
        out: &mut Vec<Edge<f64>>,
    ) {
        let w = &self.det_weights;
        match params {
            ObjectParams::Asymmetric { .. } => out.push(Edge::AsymObject {
                frame: record.frame,
                object: record.object,
                hypotheses: record.payload.all_hypotheses(),
                weight_t: w.t,
                weight_r: w.r,
            }),
            ObjectParams::Discrete { axis_w, angles, .. } => {
                let axis = axis_w.to_vector();
                match &record.payload {
                    RecordPayload::Clustered { clusters, .. } => {
                        // stale or out-of-range bindings are re-derived from
                        // the stored geometry against the current angle list
                        let mut grouped: BTreeMap<usize, Vec<Pose<f64>>> = BTreeMap::new();
                        for c in clusters {
                            let index = if fresh && c.angle_index < angles.len() {
                                c.angle_index
                            } else {
                                let rot_w = camera_est.rotation.compose(&c.rotation_co);
                                bind_angle(&rot_w, &axis, angles)
                            };
                            grouped.entry(index).or_default().extend(c.hypotheses.iter());
                        }
                        for (angle_index, hypotheses) in grouped {
                            out.push(Edge::DiscObject {
                                frame: record.frame,
                                object: record.object,
                                angle_index,
                                hypotheses,
                                weight_t: w.t,
                                weight_r: w.r,
                            });
                        }
                    }
                    RecordPayload::FullPose { hypotheses, rotation_co, angle_index } => {
                        let index = match angle_index {
                            Some(i) if fresh && *i < angles.len() => *i,
                            _ => {
                                let rot_w = camera_est.rotation.compose(rotation_co);
                                bind_angle(&rot_w, &axis, angles)
                            }
                        };
                        out.push(Edge::DiscObject {
                            frame: record.frame,
                            object: record.object,
                            angle_index: index,
                            hypotheses: hypotheses.clone(),
                            weight_t: w.t,
                            weight_r: w.r,
                        });
                    }
                    RecordPayload::AxisOnly { axis_co, hypotheses } => out.push(Edge::CtsObject {
                        frame: record.frame,
                        object: record.object,
                        translations: hypotheses.iter().map(|h| h.translation).collect(),
                        axis_co: Some(*axis_co),
                        gamma: self.params.gamma,
                        weight_t: w.t,
                        weight_ax: w.r,
                    }),
                }
            }
            ObjectParams::Continuous { .. } => {
                let (translations, axis_co) = match &record.payload {
                    RecordPayload::AxisOnly { axis_co, hypotheses } => (
                        hypotheses.iter().map(|h| h.translation).collect::<Vec<_>>(),
                        Some(*axis_co),
                    ),
                    RecordPayload::Clustered { axis_co, clusters } => (
                        clusters
                            .iter()
                            .flat_map(|c| c.hypotheses.iter().map(|h| h.translation))
                            .collect(),
                        Some(*axis_co),
                    ),
                    RecordPayload::FullPose { hypotheses, .. } => {
                        (hypotheses.iter().map(|h| h.translation).collect(), None)
                    }
                };
                out.push(Edge::CtsObject {
                    frame: record.frame,
                    object: record.object,
                    translations,
                    axis_co,
                    gamma: self.params.gamma,
                    weight_t: w.t,
                    weight_ax: w.r,
                });
            }
        }
    }

    fn record_frame(
        &mut self,
        frame: &DetectionFrame<f64>,
        informative: usize,
        scale: f64,
        active: &BTreeMap<u32, u32>,
    ) {
        let camera_est = self.cameras_est[&frame.frame_id];
        let camera_error =
            (camera_est.translation - frame.true_camera_pose.translation).norm();

        // the error series follows the map object each truth is currently
        // tracked as, so re-established objects show their fresh error
        let mut object_errors = BTreeMap::new();
        for truth in &self.scenario.objects {
            if let Some(obj) = active.get(&truth.id).and_then(|id| self.map.get(*id)) {
                object_errors
                    .insert(truth.id, crate::metrics::object_error(truth, obj).position);
            }
        }
        self.per_frame.push(FrameMetrics {
            frame: frame.frame_id,
            camera_error_t: camera_error,
            object_errors_t: object_errors,
            informative_object_edges: informative,
        });

        if self.mode == RunMode::FullSlam && self.failed.is_none() {
            if camera_error > self.params.failure_radius_multiplier * scale {
                self.failed = Some(FailureInfo {
                    frame: frame.frame_id,
                    reason: format!(
                        "camera translation error {camera_error:.3} m exceeded {} x scene scale",
                        self.params.failure_radius_multiplier
                    ),
                });
            }
            if !frame.detections.is_empty() {
                if informative == 0 {
                    self.zero_edge_streak += 1;
                } else {
                    self.zero_edge_streak = 0;
                }
                if self.zero_edge_streak >= self.params.failure_zero_edge_frames {
                    self.failed = Some(FailureInfo {
                        frame: frame.frame_id,
                        reason: format!(
                            "no association to an established object for {} consecutive frames",
                            self.zero_edge_streak
                        ),
                    });
                }
            }
        }
    }
}

/// Re-bind cluster angle indices from the association result onto the
/// stored payload.
fn rebound_payload(payload: &RecordPayload, m: &MatchRecord) -> RecordPayload {
    match payload {
        RecordPayload::Clustered { axis_co, clusters } => RecordPayload::Clustered {
            axis_co: *axis_co,
            clusters: clusters
                .iter()
                .enumerate()
                .map(|(ci, c)| ClusterRecord {
                    hypotheses: c.hypotheses.clone(),
                    rotation_co: c.rotation_co,
                    angle_index: m
                        .angle_assignments
                        .iter()
                        .find(|(cluster, _)| *cluster == ci)
                        .map(|(_, idx)| *idx)
                        .unwrap_or(c.angle_index),
                })
                .collect(),
        },
        RecordPayload::FullPose { hypotheses, rotation_co, .. } => RecordPayload::FullPose {
            hypotheses: hypotheses.clone(),
            rotation_co: *rotation_co,
            angle_index: m.angle_index,
        },
        RecordPayload::AxisOnly { axis_co, hypotheses } => RecordPayload::AxisOnly {
            axis_co: *axis_co,
            hypotheses: hypotheses.clone(),
        },
    }
}

fn payload_from_categorized(
    det: &symslam_core::categorizer::CategorizedDetection<f64>,
    _world: &WorldDetection<f64>,
) -> RecordPayload {
    match &det.params {
        SymmetryParams::Asymmetric { rotation_co } => RecordPayload::FullPose {
            hypotheses: det.raw.hypotheses.clone(),
            rotation_co: *rotation_co,
            angle_index: None,
        },
        SymmetryParams::Continuous { axis_co } => RecordPayload::AxisOnly {
            axis_co: *axis_co,
            hypotheses: det.raw.hypotheses.clone(),
        },
        SymmetryParams::Discrete { axis_co, angle_clusters } => {
            let reference = &det.raw.hypotheses[0].rotation;
            let axis_body = reference.inverse().rotate(axis_co);
            RecordPayload::Clustered {
                axis_co: *axis_co,
                clusters: angle_clusters
                    .iter()
                    .map(|c| ClusterRecord {
                        hypotheses: c.members.iter().map(|&i| det.raw.hypotheses[i]).collect(),
                        rotation_co: reference.compose(&Rotation::from_axis_angle(
                            &axis_body,
                            c.representative,
                        )),
                        angle_index: 0,
                    })
                    .collect(),
            }
        }
    }
}

/// World-frame view of a baseline (symmetry-agnostic) detection.
fn baseline_world(
    set: &HypothesisSet<f64>,
    used: &[Pose<f64>],
    index: usize,
    camera: &Pose<f64>,
) -> WorldDetection<f64> {
    let mean_translation =
        used.iter().fold(Vector3::zeros(), |acc, h| acc + h.translation) / used.len() as f64;
    WorldDetection {
        detection_index: index,
        truth_id: set.object_id_truth,
        class_label: set.class_label.clone(),
        position_w: camera.transform_point(&mean_translation),
        params: WorldParams::Asymmetric {
            rotation_w: camera.rotation.compose(&used[0].rotation),
        },
        range: mean_translation.norm(),
        hypothesis_rotations_w: used
            .iter()
            .map(|h| camera.rotation.compose(&h.rotation))
            .collect(),
    }
}

/// Run one pipeline over a scenario and assemble every artifact.
pub fn run_pipeline(
    scenario: &Scenario<f64>,
    kind: PipelineKind,
    mode: RunMode,
    params: &PipelineParams,
) -> RunOutput {
    let digest = scenario_digest(&scenario.to_jsonl());
    let mut session = Session::new(scenario, kind, mode, params);
    session.run();

    // final graph snapshot for debugging
    let mut state = GraphState::new();
    for (&id, pose) in &session.cameras_est {
        state.cameras.insert(id, *pose);
    }
    for obj in session.map.objects() {
        state.objects.insert(obj.id, ObjectNode::from_object_params(&obj.params));
    }
    let graph_json = symslam_core::optimizer::export_snapshot(
        &state,
        &session.odometry,
        session.last_report.as_ref(),
    );

    let metrics = compute_metrics(
        scenario,
        &digest,
        kind.name(),
        mode.name(),
        &session.cameras_est,
        &session.map,
        session.per_frame.clone(),
        session.failed.clone(),
    );
    RunOutput {
        trajectory_csv: crate::metrics::trajectory_csv(scenario, &session.cameras_est),
        map_json: serde_json::to_value(&session.map).expect("map serializes"),
        solver_report_csv: session
            .last_report
            .as_ref()
            .map(SolveReport::to_csv)
            .unwrap_or_else(|| "iteration,cost,lambda,winner_switches,accepted\n".to_string()),
        graph_json,
        metrics,
    }
}

/// Clusters of a world detection, for tests that need the grouping.
pub fn world_clusters(det: &WorldDetection<f64>) -> Option<&[WorldCluster<f64>]> {
    match &det.params {
        WorldParams::Discrete { clusters, .. } => Some(clusters),
        _ => None,
    }
}
