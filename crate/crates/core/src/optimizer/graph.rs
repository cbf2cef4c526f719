//! Factor graph state: camera nodes, per-symmetry-type object nodes and the
//! edge set.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use serde::Serialize;

use crate::association::ObjectParams;
use crate::liegroup::{rotation_between, Pose, Rotation, SphericalAxis};
use crate::scalar::{cast, wrap_to_circle, wrap_to_signed, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum NodeKey {
    Camera(usize),
    Object(u32),
}

/// Object parameter block. Symmetric objects parameterize the axis in an
/// anchored spherical chart: the world axis is `anchor · f(φ, ψ)`, with the
/// anchor chosen so the chart stays away from its poles.
#[derive(Debug, Clone)]
pub enum ObjectNode<T: Real> {
    /// 6 local coordinates (se3 increment).
    Asymmetric { pose: Pose<T> },
    /// 5 + m values: position, axis chart angles, symmetric angles.
    Discrete {
        position: Vector3<T>,
        anchor: Rotation<T>,
        phi: T,
        psi: T,
        angles: Vec<T>,
    },
    /// 5 values: position and axis chart angles.
    Continuous { position: Vector3<T>, anchor: Rotation<T>, phi: T, psi: T },
}

fn anchored_chart<T: Real>(axis: &Vector3<T>) -> (Rotation<T>, T, T) {
    // anchor maps f(π/2, 0) = x̂ onto the axis, so the chart starts on the
    // equator regardless of the axis direction
    (rotation_between(&Vector3::x(), &axis.normalize()), T::frac_pi_2(), T::zero())
}

impl<T: Real> ObjectNode<T> {
    pub fn dim(&self) -> usize {
        match self {
            ObjectNode::Asymmetric { .. } => 6,
            ObjectNode::Discrete { angles, .. } => 5 + angles.len(),
            ObjectNode::Continuous { .. } => 5,
        }
    }

    /// World-frame symmetry axis, for symmetric nodes.
    pub fn axis_world(&self) -> Option<Vector3<T>> {
        match self {
            ObjectNode::Asymmetric { .. } => None,
            ObjectNode::Discrete { anchor, phi, psi, .. }
            | ObjectNode::Continuous { anchor, phi, psi, .. } => {
                Some(anchor.rotate(&SphericalAxis::new(*phi, *psi).to_vector()))
            }
        }
    }

    pub fn position(&self) -> Vector3<T> {
        match self {
            ObjectNode::Asymmetric { pose } => pose.translation,
            ObjectNode::Discrete { position, .. } | ObjectNode::Continuous { position, .. } => {
                *position
            }
        }
    }

    pub fn from_object_params(params: &ObjectParams<T>) -> Self {
        match params {
            ObjectParams::Asymmetric { pose_w } => ObjectNode::Asymmetric { pose: *pose_w },
            ObjectParams::Discrete { position_w, axis_w, angles } => {
                let (anchor, phi, psi) = anchored_chart(&axis_w.to_vector());
                ObjectNode::Discrete {
                    position: *position_w,
                    anchor,
                    phi,
                    psi,
                    angles: angles.clone(),
                }
            }
            ObjectParams::Continuous { position_w, axis_w } => {
                let (anchor, phi, psi) = anchored_chart(&axis_w.to_vector());
                ObjectNode::Continuous { position: *position_w, anchor, phi, psi }
            }
        }
    }

    pub fn to_object_params(&self) -> ObjectParams<T> {
        match self {
            ObjectNode::Asymmetric { pose } => ObjectParams::Asymmetric { pose_w: *pose },
            ObjectNode::Discrete { position, angles, .. } => ObjectParams::Discrete {
                position_w: *position,
                axis_w: SphericalAxis::from_vector(&self.axis_world().unwrap()),
                angles: angles.iter().map(|&a| wrap_to_circle(a)).collect(),
            },
            ObjectNode::Continuous { position, .. } => ObjectParams::Continuous {
                position_w: *position,
                axis_w: SphericalAxis::from_vector(&self.axis_world().unwrap()),
            },
        }
    }

    fn apply_increment(&mut self, delta: &[T]) {
        match self {
            ObjectNode::Asymmetric { pose } => {
                let d = nalgebra::Vector6::from_row_slice(delta);
                *pose = pose.boxplus(&d);
            }
            ObjectNode::Discrete { position, phi, psi, angles, .. } => {
                *position += Vector3::new(delta[0], delta[1], delta[2]);
                *phi += delta[3];
                *psi += delta[4];
                for (a, d) in angles.iter_mut().zip(&delta[5..]) {
                    *a += *d;
                }
            }
            ObjectNode::Continuous { position, phi, psi, .. } => {
                *position += Vector3::new(delta[0], delta[1], delta[2]);
                *phi += delta[3];
                *psi += delta[4];
            }
        }
    }

    /// Wrap chart angles into their canonical ranges and re-anchor the axis
    /// chart when φ drifts near a pole. The represented geometry is
    /// unchanged.
    fn wrap_and_reanchor(&mut self, pole_band: T) {
        let (anchor, phi, psi, angles): (&mut Rotation<T>, &mut T, &mut T, Option<&mut Vec<T>>) =
            match self {
                ObjectNode::Asymmetric { .. } => return,
                ObjectNode::Discrete { anchor, phi, psi, angles, .. } => {
                    (anchor, phi, psi, Some(angles))
                }
                ObjectNode::Continuous { anchor, phi, psi, .. } => (anchor, phi, psi, None),
            };
        // fold φ into [0, π], compensating the azimuth
        *phi = wrap_to_signed(*phi).abs();
        if *phi > T::pi() {
            *phi = T::two_pi() - *phi;
            *psi += T::pi();
        }
        *psi = wrap_to_signed(*psi);
        if *phi < pole_band || *phi > T::pi() - pole_band {
            let axis = anchor.rotate(&SphericalAxis::new(*phi, *psi).to_vector());
            let (new_anchor, new_phi, new_psi) = anchored_chart(&axis);
            *anchor = new_anchor;
            *phi = new_phi;
            *psi = new_psi;
        }
        if let Some(angles) = angles {
            for a in angles.iter_mut() {
                *a = wrap_to_circle(*a);
            }
        }
    }
}

/// Snapshot of one node, used to restore state after finite-difference
/// probes.
#[derive(Debug, Clone)]
pub enum NodeSnapshot<T: Real> {
    Camera(Pose<T>),
    Object(ObjectNode<T>),
}

/// Mutable optimization state.
#[derive(Debug, Clone, Default)]
pub struct GraphState<T: Real> {
    pub cameras: BTreeMap<usize, Pose<T>>,
    pub objects: BTreeMap<u32, ObjectNode<T>>,
    /// Nodes excluded from optimization (gauge anchors, out-of-window).
    pub fixed: BTreeSet<NodeKey>,
}

impl<T: Real> GraphState<T> {
    pub fn new() -> Self {
        GraphState { cameras: BTreeMap::new(), objects: BTreeMap::new(), fixed: BTreeSet::new() }
    }

    pub fn is_fixed(&self, key: &NodeKey) -> bool {
        self.fixed.contains(key)
    }

    pub fn node_dim(&self, key: &NodeKey) -> Option<usize> {
        match key {
            NodeKey::Camera(id) => self.cameras.get(id).map(|_| 6),
            NodeKey::Object(id) => self.objects.get(id).map(ObjectNode::dim),
        }
    }

    pub fn apply_increment(&mut self, key: &NodeKey, delta: &[T]) {
        match key {
            NodeKey::Camera(id) => {
                let pose = self.cameras.get_mut(id).expect("camera node");
                let d = nalgebra::Vector6::from_row_slice(delta);
                *pose = pose.boxplus(&d);
            }
            NodeKey::Object(id) => {
                self.objects.get_mut(id).expect("object node").apply_increment(delta);
            }
        }
    }

    pub fn snapshot(&self, key: &NodeKey) -> NodeSnapshot<T> {
        match key {
            NodeKey::Camera(id) => NodeSnapshot::Camera(self.cameras[id]),
            NodeKey::Object(id) => NodeSnapshot::Object(self.objects[id].clone()),
        }
    }

    pub fn restore(&mut self, key: &NodeKey, snapshot: NodeSnapshot<T>) {
        match (key, snapshot) {
            (NodeKey::Camera(id), NodeSnapshot::Camera(pose)) => {
                self.cameras.insert(*id, pose);
            }
            (NodeKey::Object(id), NodeSnapshot::Object(node)) => {
                self.objects.insert(*id, node);
            }
            _ => panic!("snapshot kind mismatch"),
        }
    }

    pub fn wrap_and_reanchor(&mut self, pole_band: T) {
        let fixed = self.fixed.clone();
        for (id, node) in self.objects.iter_mut() {
            if !fixed.contains(&NodeKey::Object(*id)) {
                node.wrap_and_reanchor(pole_band);
            }
        }
    }
}

/// One measurement constraint.
#[derive(Debug, Clone)]
pub enum Edge<T: Real> {
    /// Relative camera motion between consecutive frames.
    Odometry { from: usize, to: usize, measurement: Pose<T>, weight_t: T, weight_r: T },
    /// Max-mixture 6-DoF constraint from a multi-hypothesis detection of an
    /// asymmetric object.
    AsymObject { frame: usize, object: u32, hypotheses: Vec<Pose<T>>, weight_t: T, weight_r: T },
    /// Max-mixture 6-DoF constraint against the object's i-th symmetric
    /// pose, built from shared position/axis and the i-th symmetric angle.
    DiscObject {
        frame: usize,
        object: u32,
        angle_index: usize,
        hypotheses: Vec<Pose<T>>,
        weight_t: T,
        weight_r: T,
    },
    /// Translation max-mixture plus axis-of-symmetry constraint for a
    /// continuous (or shared-parameter) observation. `axis_co` is the
    /// detection's symmetry axis in the camera frame; absent when the
    /// observation carried no axis estimate.
    CtsObject {
        frame: usize,
        object: u32,
        translations: Vec<Vector3<T>>,
        axis_co: Option<Vector3<T>>,
        gamma: T,
        weight_t: T,
        weight_ax: T,
    },
}

impl<T: Real> Edge<T> {
    pub fn dim(&self) -> usize {
        match self {
            Edge::Odometry { .. } | Edge::AsymObject { .. } | Edge::DiscObject { .. } => 6,
            Edge::CtsObject { axis_co, .. } => {
                if axis_co.is_some() {
                    5
                } else {
                    3
                }
            }
        }
    }

    pub fn nodes(&self) -> [NodeKey; 2] {
        match self {
            Edge::Odometry { from, to, .. } => [NodeKey::Camera(*from), NodeKey::Camera(*to)],
            Edge::AsymObject { frame, object, .. }
            | Edge::DiscObject { frame, object, .. }
            | Edge::CtsObject { frame, object, .. } => {
                [NodeKey::Camera(*frame), NodeKey::Object(*object)]
            }
        }
    }

    /// Number of max-mixture components.
    pub fn component_count(&self) -> usize {
        match self {
            Edge::Odometry { .. } => 1,
            Edge::AsymObject { hypotheses, .. } | Edge::DiscObject { hypotheses, .. } => {
                hypotheses.len()
            }
            Edge::CtsObject { translations, .. } => translations.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Edge::Odometry { .. } => "odometry",
            Edge::AsymObject { .. } => "asym_object",
            Edge::DiscObject { .. } => "disc_object",
            Edge::CtsObject { .. } => "cts_object",
        }
    }
}

/// Default pole re-anchoring band: 5 degrees.
pub fn default_pole_band<T: Real>() -> T {
    cast(5f64.to_radians())
}
