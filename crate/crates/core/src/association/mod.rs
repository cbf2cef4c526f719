//! Object map maintenance: symmetry-aware data association, symmetry-angle
//! bookkeeping and type promotion.

mod matching;

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use matching::{
    align_angle_to_axis, axis_line_angle, match_score, rotation_angle_about, warp_to_world,
    Gates, MatchOutcome, WorldCluster, WorldDetection, WorldParams,
};

use crate::categorizer::{CategorizedDetection, SymmetryType};
use crate::liegroup::{canonical_axis_sign, Pose, Rotation, SphericalAxis};
use crate::scalar::{cast, circular_distance, Real};

/// Association thresholds and bookkeeping parameters. Angles in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationParams {
    /// Position gate, meters.
    pub tau_t: f64,
    /// Axis line-angle gate.
    pub tau_ax: f64,
    /// Full-rotation gate for asymmetric pairs.
    pub tau_r: f64,
    /// Circular distance below which a detected symmetry angle merges with
    /// an existing map angle.
    pub angle_merge_eps: f64,
    /// Observation window for the symmetry-type majority vote.
    pub vote_window: usize,
}

impl Default for AssociationParams {
    fn default() -> Self {
        AssociationParams {
            tau_t: 0.75,
            tau_ax: 30f64.to_radians(),
            tau_r: 30f64.to_radians(),
            angle_merge_eps: 25f64.to_radians(),
            vote_window: 5,
        }
    }
}

/// Whether association reasons about symmetry or treats everything as a
/// 6-DoF pose (the symmetry-agnostic baselines).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPolicy {
    SymmetryAware,
    SymmetryAgnostic,
}

/// Per-type persistent state of a map object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObjectParams<T: Real> {
    Asymmetric {
        pose_w: Pose<T>,
    },
    Discrete {
        position_w: Vector3<T>,
        axis_w: SphericalAxis<T>,
        /// Symmetric angles about the axis, `[0, 2π)`, pairwise separated by
        /// more than the merge epsilon.
        angles: Vec<T>,
    },
    Continuous {
        position_w: Vector3<T>,
        axis_w: SphericalAxis<T>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Observation {
    pub frame_id: usize,
    pub detection_index: usize,
    /// Ground-truth object id of the matched detection (evaluation only).
    pub truth_id: u32,
    pub observed_type: SymmetryType,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapObject<T: Real> {
    pub id: u32,
    pub class_label: String,
    pub params: ObjectParams<T>,
    pub observations: Vec<Observation>,
}

impl<T: Real> MapObject<T> {
    pub fn symmetry_type(&self) -> SymmetryType {
        match &self.params {
            ObjectParams::Asymmetric { .. } => SymmetryType::Asymmetric,
            ObjectParams::Discrete { .. } => SymmetryType::Discrete,
            ObjectParams::Continuous { .. } => SymmetryType::Continuous,
        }
    }

    pub fn position_w(&self) -> Vector3<T> {
        match &self.params {
            ObjectParams::Asymmetric { pose_w } => pose_w.translation,
            ObjectParams::Discrete { position_w, .. }
            | ObjectParams::Continuous { position_w, .. } => *position_w,
        }
    }

    pub fn axis_w_vector(&self) -> Option<Vector3<T>> {
        match &self.params {
            ObjectParams::Asymmetric { .. } => None,
            ObjectParams::Discrete { axis_w, .. } | ObjectParams::Continuous { axis_w, .. } => {
                Some(axis_w.to_vector())
            }
        }
    }

    pub fn angles(&self) -> &[T] {
        match &self.params {
            ObjectParams::Discrete { angles, .. } => angles,
            _ => &[],
        }
    }
}

/// One matched detection.
#[derive(Debug, Clone)]
pub struct MatchRecord {
    pub detection_index: usize,
    pub object_id: u32,
    /// Map angle index matched by the reference cluster, for discrete
    /// objects.
    pub angle_index: Option<usize>,
    /// Every (detection cluster, map angle index) assignment of this match.
    pub angle_assignments: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct NewObject {
    pub detection_index: usize,
    pub object_id: u32,
}

/// Outcome of associating one frame of detections against the map.
#[derive(Debug, Clone, Default)]
pub struct AssociationResult {
    pub matches: Vec<MatchRecord>,
    pub new_objects: Vec<NewObject>,
    /// Map objects whose symmetry type changed this frame.
    pub promotions: Vec<u32>,
    /// Detections left unregistered under [`Registration::Deferred`].
    pub unmatched: Vec<usize>,
}

/// What happens to unmatched detections: registered as new map objects
/// right away, or handed back to the caller (which may gate registration on
/// repeated consistent observations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registration {
    Immediate,
    Deferred,
}

/// The persistent object map. Single writer: `associate` mutates it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectMap<T: Real> {
    objects: BTreeMap<u32, MapObject<T>>,
    next_id: u32,
    pub params: AssociationParams,
}

impl<T: Real> ObjectMap<T> {
    pub fn new(params: AssociationParams) -> Self {
        ObjectMap { objects: BTreeMap::new(), next_id: 1, params }
    }

    pub fn objects(&self) -> impl Iterator<Item = &MapObject<T>> {
        self.objects.values()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&MapObject<T>> {
        self.objects.get(&id)
    }

    pub fn get_mut(&mut self, id: u32) -> Option<&mut MapObject<T>> {
        self.objects.get_mut(&id)
    }

    /// Overwrite an object's geometric parameters (optimizer write-back).
    pub fn set_params(&mut self, id: u32, params: ObjectParams<T>) {
        if let Some(obj) = self.objects.get_mut(&id) {
            obj.params = params;
        }
    }

    /// Register an unmatched detection as a new map object.
    pub fn register_new(&mut self, detection: &WorldDetection<T>, frame_id: usize) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        let params = match &detection.params {
            WorldParams::Asymmetric { rotation_w } => ObjectParams::Asymmetric {
                pose_w: Pose::new(*rotation_w, detection.position_w),
            },
            WorldParams::Continuous { axis_w } => ObjectParams::Continuous {
                position_w: detection.position_w,
                axis_w: SphericalAxis::from_vector(axis_w),
            },
            WorldParams::Discrete { axis_w, clusters } => {
                let merge = cast(self.params.angle_merge_eps);
                let mut angles: Vec<T> = Vec::new();
                for c in clusters {
                    if !angles.iter().any(|&a| circular_distance(a, c.angle_w) <= merge) {
                        angles.push(c.angle_w);
                    }
                }
                angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ObjectParams::Discrete {
                    position_w: detection.position_w,
                    axis_w: SphericalAxis::from_vector(axis_w),
                    angles,
                }
            }
        };
        self.objects.insert(
            id,
            MapObject {
                id,
                class_label: detection.class_label.clone(),
                params,
                observations: vec![Observation {
                    frame_id,
                    detection_index: detection.detection_index,
                    truth_id: detection.truth_id,
                    observed_type: detection.symmetry_type(),
                }],
            },
        );
        id
    }

    /// Associate one frame of categorized detections.
    ///
    /// Greedy best-score assignment over all gated (detection, object)
    /// pairs; each map object is matched at most once per frame. Matched
    /// discrete detections have their angle clusters merged into the map
    /// object's angle list; unmatched detections are registered as new
    /// objects.
    pub fn associate(
        &mut self,
        detections: &[CategorizedDetection<T>],
        camera: &Pose<T>,
        frame_id: usize,
        gates: &Gates<T>,
        policy: MatchPolicy,
    ) -> AssociationResult {
        let world: Vec<WorldDetection<T>> = detections
            .iter()
            .enumerate()
            .map(|(i, d)| warp_to_world(d, i, camera))
            .collect();
        self.associate_world(&world, frame_id, gates, policy, Registration::Immediate)
    }

    /// Association over already-warped detections (the baselines warp with
    /// different rotation candidates).
    pub fn associate_world(
        &mut self,
        world: &[WorldDetection<T>],
        frame_id: usize,
        gates: &Gates<T>,
        policy: MatchPolicy,
        registration: Registration,
    ) -> AssociationResult {
        let mut result = AssociationResult::default();

        // score every pair
        struct Candidate<T> {
            score: T,
            det: usize,
            obj: u32,
            promote: bool,
        }
        let mut candidates: Vec<Candidate<T>> = Vec::new();
        for det in world {
            let rotation_candidates = rotation_candidates_for(det, policy);
            for obj in self.objects.values() {
                if let Some(outcome) = match_score(det, &rotation_candidates, obj, gates) {
                    if outcome.promote_to_discrete && policy == MatchPolicy::SymmetryAgnostic {
                        continue; // baselines never reinterpret a failed 6-DoF match
                    }
                    candidates.push(Candidate {
                        score: outcome.score,
                        det: det.detection_index,
                        obj: obj.id,
                        promote: outcome.promote_to_discrete,
                    });
                }
            }
        }
        candidates.sort_by(|a, b| {
            a.score
                .partial_cmp(&b.score)
                .unwrap()
                .then(a.det.cmp(&b.det))
                .then(a.obj.cmp(&b.obj))
        });

        let mut det_taken = vec![false; world.len()];
        let mut obj_taken: std::collections::BTreeSet<u32> = Default::default();
        let mut assignments: Vec<(usize, u32, bool)> = Vec::new();
        for c in &candidates {
            if det_taken[c.det] || obj_taken.contains(&c.obj) {
                continue;
            }
            det_taken[c.det] = true;
            obj_taken.insert(c.obj);
            assignments.push((c.det, c.obj, c.promote));
        }
        assignments.sort_by_key(|&(det, _, _)| det);

        for (det_idx, obj_id, promote) in assignments {
            let det = &world[det_idx];
            if promote {
                self.promote_to_discrete(obj_id, det);
                result.promotions.push(obj_id);
            }
            let record = self.record_match(det, obj_id, frame_id);
            if policy == MatchPolicy::SymmetryAware {
                if self.apply_type_vote(obj_id, det) {
                    result.promotions.push(obj_id);
                }
            }
            result.matches.push(record);
        }

        for det in world {
            if !det_taken[det.detection_index] {
                match registration {
                    Registration::Immediate => {
                        let id = self.register_new(det, frame_id);
                        result.new_objects.push(NewObject {
                            detection_index: det.detection_index,
                            object_id: id,
                        });
                    }
                    Registration::Deferred => result.unmatched.push(det.detection_index),
                }
            }
        }
        result
    }

    /// Merge the detection's symmetry angles into the object and log the
    /// observation.
    fn record_match(
        &mut self,
        det: &WorldDetection<T>,
        obj_id: u32,
        frame_id: usize,
    ) -> MatchRecord {
        let merge = cast(self.params.angle_merge_eps);
        let obj = self.objects.get_mut(&obj_id).expect("matched object exists");
        obj.observations.push(Observation {
            frame_id,
            detection_index: det.detection_index,
            truth_id: det.truth_id,
            observed_type: det.symmetry_type(),
        });

        let mut record = MatchRecord {
            detection_index: det.detection_index,
            object_id: obj_id,
            angle_index: None,
            angle_assignments: Vec::new(),
        };

        let ObjectParams::Discrete { axis_w, angles, .. } = &mut obj.params else {
            return record;
        };
        let map_axis = axis_w.to_vector();

        // detection angle candidates: (cluster index, world angle, reference?)
        let det_angles: Vec<(usize, T, bool)> = match &det.params {
            WorldParams::Discrete { axis_w: det_axis, clusters } => clusters
                .iter()
                .enumerate()
                .map(|(ci, c)| {
                    (ci, align_angle_to_axis(c.angle_w, det_axis, &map_axis), c.is_reference)
                })
                .collect(),
            WorldParams::Asymmetric { rotation_w } => {
                vec![(0, rotation_angle_about(rotation_w, &map_axis), true)]
            }
            WorldParams::Continuous { .. } => Vec::new(),
        };

        for (cluster_idx, angle, is_reference) in det_angles {
            let nearest = angles
                .iter()
                .enumerate()
                .map(|(i, &a)| (i, circular_distance(a, angle)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let index = match nearest {
                Some((i, d)) if d <= merge => i,
                _ => {
                    angles.push(angle);
                    angles.len() - 1
                }
            };
            record.angle_assignments.push((cluster_idx, index));
            if is_reference || record.angle_index.is_none() {
                record.angle_index = Some(index);
            }
        }
        record
    }

    /// Asymmetric-vs-asymmetric pair that failed 6-DoF but passed the shared
    /// parameters: reinterpret the pair as two symmetric angles of a
    /// discrete object.
    fn promote_to_discrete(&mut self, obj_id: u32, det: &WorldDetection<T>) {
        let obj = self.objects.get_mut(&obj_id).expect("promoted object exists");
        let ObjectParams::Asymmetric { pose_w } = &obj.params else {
            return;
        };
        let WorldParams::Asymmetric { rotation_w } = &det.params else {
            return;
        };
        let map_rotation = pose_w.rotation;
        let position_w = pose_w.translation;
        // world axis of the relative rotation between the two orientations
        let relative = rotation_w.compose(&map_rotation.inverse()).log();
        let axis = match relative.axis() {
            Some(a) => canonical_axis_sign(&a).0,
            None => return,
        };
        let merge = cast(self.params.angle_merge_eps);
        let mut angles = vec![rotation_angle_about(&map_rotation, &axis)];
        let det_angle = rotation_angle_about(rotation_w, &axis);
        if circular_distance(angles[0], det_angle) > merge {
            angles.push(det_angle);
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        obj.params = ObjectParams::Discrete {
            position_w,
            axis_w: SphericalAxis::from_vector(&axis),
            angles,
        };
    }

    /// Majority vote over the recent observation window. Transitions allowed:
    /// asymmetric → discrete/continuous and discrete ↔ continuous; nothing
    /// ever votes back to asymmetric. Ties keep the current type. Returns
    /// true when the type changed.
    fn apply_type_vote(&mut self, obj_id: u32, det: &WorldDetection<T>) -> bool {
        let window = self.params.vote_window;
        let merge = cast(self.params.angle_merge_eps);
        let obj = self.objects.get_mut(&obj_id).expect("voted object exists");
        let current = obj.symmetry_type();

        let recent = obj.observations.iter().rev().take(window);
        let (mut n_asym, mut n_disc, mut n_cts) = (0usize, 0usize, 0usize);
        for o in recent {
            match o.observed_type {
                SymmetryType::Asymmetric => n_asym += 1,
                SymmetryType::Discrete => n_disc += 1,
                SymmetryType::Continuous => n_cts += 1,
            }
        }
        let candidate = if n_disc > n_cts && n_disc > n_asym {
            SymmetryType::Discrete
        } else if n_cts > n_disc && n_cts > n_asym {
            SymmetryType::Continuous
        } else {
            return false; // asymmetric majority or tie: keep current
        };
        if candidate == current {
            return false;
        }

        match (&obj.params, candidate) {
            (ObjectParams::Asymmetric { pose_w }, SymmetryType::Discrete) => {
                // need an axis from the detection
                let Some(det_axis) = det.axis_w() else { return false };
                let mut angles = vec![rotation_angle_about(&pose_w.rotation, det_axis)];
                if let WorldParams::Discrete { axis_w, clusters } = &det.params {
                    for c in clusters {
                        let a = align_angle_to_axis(c.angle_w, axis_w, det_axis);
                        if !angles.iter().any(|&x| circular_distance(x, a) <= merge) {
                            angles.push(a);
                        }
                    }
                }
                angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
                obj.params = ObjectParams::Discrete {
                    position_w: pose_w.translation,
                    axis_w: SphericalAxis::from_vector(det_axis),
                    angles,
                };
            }
            (ObjectParams::Asymmetric { pose_w }, SymmetryType::Continuous) => {
                let Some(det_axis) = det.axis_w() else { return false };
                obj.params = ObjectParams::Continuous {
                    position_w: pose_w.translation,
                    axis_w: SphericalAxis::from_vector(det_axis),
                };
            }
            (ObjectParams::Discrete { position_w, axis_w, .. }, SymmetryType::Continuous) => {
                obj.params =
                    ObjectParams::Continuous { position_w: *position_w, axis_w: *axis_w };
            }
            (ObjectParams::Continuous { position_w, axis_w }, SymmetryType::Discrete) => {
                // seed angles from the triggering detection when it has any
                let map_axis = axis_w.to_vector();
                let mut angles: Vec<T> = Vec::new();
                match &det.params {
                    WorldParams::Discrete { axis_w: det_axis, clusters } => {
                        for c in clusters {
                            let a = align_angle_to_axis(c.angle_w, det_axis, &map_axis);
                            if !angles.iter().any(|&x| circular_distance(x, a) <= merge) {
                                angles.push(a);
                            }
                        }
                    }
                    WorldParams::Asymmetric { rotation_w } => {
                        angles.push(rotation_angle_about(rotation_w, &map_axis));
                    }
                    WorldParams::Continuous { .. } => {}
                }
                if angles.is_empty() {
                    return false;
                }
                angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
                obj.params = ObjectParams::Discrete {
                    position_w: *position_w,
                    axis_w: *axis_w,
                    angles,
                };
            }
            _ => return false,
        }
        true
    }
}

/// Rotation candidates for the 6-DoF rotation term: the symmetry-agnostic
/// policy ranks against the best raw hypothesis, the symmetry-aware policy
/// against the averaged representative rotation.
fn rotation_candidates_for<T: Real>(
    det: &WorldDetection<T>,
    policy: MatchPolicy,
) -> Vec<Rotation<T>> {
    match (&det.params, policy) {
        (WorldParams::Asymmetric { .. }, MatchPolicy::SymmetryAgnostic) => {
            det.hypothesis_rotations_w.clone()
        }
        (WorldParams::Asymmetric { rotation_w }, MatchPolicy::SymmetryAware) => {
            vec![*rotation_w]
        }
        _ => Vec::new(),
    }
}
