//! Per-edge residuals. Max-mixture edges select the component with the
//! lowest weighted error; the selection can be pinned so finite differences
//! stay on the active piece.

use nalgebra::Vector6;

use super::graph::{Edge, GraphState, ObjectNode};
use crate::liegroup::{Pose, Rotation};
use crate::scalar::{wrap_to_signed, Real};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has camera nodes but none is fixed (gauge freedom)")]
    NoFixedCamera,
    #[error("edge {edge} references missing node {node}")]
    MissingNode { edge: usize, node: String },
    #[error("free node {0} is not touched by any edge")]
    UnreachableNode(String),
    #[error("edge {edge}: angle index {index} out of range for object {object} ({len} angles)")]
    BadAngleIndex { edge: usize, object: u32, index: usize, len: usize },
    #[error("non-finite residual on edge {edge} ({kind})")]
    NonFiniteResidual { edge: usize, kind: &'static str },
}

/// Fixed-capacity residual block (edges are at most 6-dimensional).
#[derive(Debug, Clone, Copy)]
pub struct ResidualBuf<T> {
    vals: [T; 6],
    len: usize,
}

impl<T: Real> ResidualBuf<T> {
    fn from_vector6(v: &Vector6<T>) -> Self {
        ResidualBuf { vals: [v[0], v[1], v[2], v[3], v[4], v[5]], len: 6 }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.vals[..self.len]
    }

    pub fn squared_norm(&self) -> T {
        self.as_slice().iter().fold(T::zero(), |acc, &v| acc + v * v)
    }
}

fn weighted_pose_error<T: Real>(
    hypothesis: &Pose<T>,
    object_inv: &Pose<T>,
    camera: &Pose<T>,
    weight_t: T,
    weight_r: T,
) -> Vector6<T> {
    let err = hypothesis.compose(object_inv).compose(camera).log();
    let mut out = err;
    for i in 0..3 {
        out[i] *= weight_t;
        out[i + 3] *= weight_r;
    }
    out
}

fn min_pose_error<T: Real>(
    hypotheses: &[Pose<T>],
    object_pose: &Pose<T>,
    camera: &Pose<T>,
    weight_t: T,
    weight_r: T,
    pinned: Option<usize>,
) -> (Vector6<T>, usize) {
    let object_inv = object_pose.inverse();
    if let Some(j) = pinned {
        return (weighted_pose_error(&hypotheses[j], &object_inv, camera, weight_t, weight_r), j);
    }
    let mut best: Option<(T, usize, Vector6<T>)> = None;
    for (j, h) in hypotheses.iter().enumerate() {
        let e = weighted_pose_error(h, &object_inv, camera, weight_t, weight_r);
        let n = e.norm_squared();
        if best.as_ref().map_or(true, |(bn, _, _)| n < *bn) {
            best = Some((n, j, e));
        }
    }
    let (_, j, e) = best.expect("max-mixture edge has at least one component");
    (e, j)
}

/// The i-th symmetric pose of a discrete object: rotation by the i-th
/// symmetric angle about the shared axis, at the shared position.
pub fn symmetric_object_pose<T: Real>(node: &ObjectNode<T>, angle_index: usize) -> Pose<T> {
    let (position, angles) = match node {
        ObjectNode::Discrete { position, angles, .. } => (position, angles),
        _ => panic!("symmetric_object_pose needs a discrete node"),
    };
    let axis = node.axis_world().expect("discrete node has an axis");
    Pose::new(Rotation::from_axis_angle(&axis, angles[angle_index]), *position)
}

/// Evaluate one edge. Returns the weighted residual and the index of the
/// winning max-mixture component (if the edge has components).
///
/// With `pinned` the given component is evaluated instead of re-selecting
/// the winner.
pub fn eval_edge<T: Real>(
    edge: &Edge<T>,
    state: &GraphState<T>,
    pinned: Option<usize>,
) -> (ResidualBuf<T>, Option<usize>) {
    match edge {
        Edge::Odometry { from, to, measurement, weight_t, weight_r } => {
            let a = &state.cameras[from];
            let b = &state.cameras[to];
            let err = measurement.inverse().compose(&a.inverse()).compose(b).log();
            let mut out = ResidualBuf::from_vector6(&err);
            for i in 0..3 {
                out.vals[i] *= *weight_t;
                out.vals[i + 3] *= *weight_r;
            }
            (out, None)
        }
        Edge::AsymObject { frame, object, hypotheses, weight_t, weight_r } => {
            let camera = &state.cameras[frame];
            let ObjectNode::Asymmetric { pose } = &state.objects[object] else {
                panic!("asym edge on non-asymmetric node {object}");
            };
            let (e, j) = min_pose_error(hypotheses, pose, camera, *weight_t, *weight_r, pinned);
            (ResidualBuf::from_vector6(&e), Some(j))
        }
        Edge::DiscObject { frame, object, angle_index, hypotheses, weight_t, weight_r } => {
            let camera = &state.cameras[frame];
            let node = &state.objects[object];
            let object_pose = symmetric_object_pose(node, *angle_index);
            let (e, j) =
                min_pose_error(hypotheses, &object_pose, camera, *weight_t, *weight_r, pinned);
            (ResidualBuf::from_vector6(&e), Some(j))
        }
        Edge::CtsObject { frame, object, translations, axis_co, gamma, weight_t, weight_ax } => {
            let camera = &state.cameras[frame];
            let node = &state.objects[object];
            let (position, anchor, phi, psi) = match node {
                ObjectNode::Discrete { position, anchor, phi, psi, .. }
                | ObjectNode::Continuous { position, anchor, phi, psi } => {
                    (position, anchor, *phi, *psi)
                }
                ObjectNode::Asymmetric { .. } => {
                    panic!("cts edge on asymmetric node {object}")
                }
            };
            // expected camera-frame object position: R_wcᵀ (t_wo - t_wc)
            let expected =
                camera.rotation.inverse().rotate(&(position - camera.translation));
            let winner = if let Some(j) = pinned {
                j
            } else {
                let mut best = (T::zero(), usize::MAX);
                for (j, t) in translations.iter().enumerate() {
                    let n = (t - expected).norm_squared();
                    if best.1 == usize::MAX || n < best.0 {
                        best = (n, j);
                    }
                }
                best.1
            };
            let diff = translations[winner] - expected;
            let mut out = ResidualBuf { vals: [T::zero(); 6], len: 3 };
            for i in 0..3 {
                out.vals[i] = diff[i] * *weight_t;
            }
            if let Some(axis_co) = axis_co {
                // measured world axis, hemisphere-aligned to the state axis,
                // expressed in the anchored chart
                let mut measured = camera.rotation.rotate(axis_co);
                let state_axis = node.axis_world().expect("symmetric node has an axis");
                if measured.dot(&state_axis) < T::zero() {
                    measured = -measured;
                }
                let chart = anchor.inverse().rotate(&measured);
                let angles = crate::liegroup::SphericalAxis::from_vector(&chart);
                let scale = gamma.sqrt() * *weight_ax;
                out.vals[3] = (angles.phi - phi) * scale;
                out.vals[4] = wrap_to_signed(angles.psi - psi) * scale;
                out.len = 5;
            }
            (out, Some(winner))
        }
    }
}

/// Sum of squared residuals over `edges` with winners re-selected.
pub fn total_cost<T: Real>(edges: &[Edge<T>], state: &GraphState<T>) -> T {
    edges.iter().fold(T::zero(), |acc, e| acc + eval_edge(e, state, None).0.squared_norm())
}
