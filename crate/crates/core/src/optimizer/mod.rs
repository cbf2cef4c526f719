//! Factor graph over camera poses and map objects with Levenberg-Marquardt
//! joint optimization. Object edges are per-symmetry-type max-mixture
//! residuals; odometry edges constrain consecutive cameras.

mod graph;
mod lm;
mod residual;

use serde_json::json;

pub use graph::{default_pole_band, Edge, GraphState, NodeKey, NodeSnapshot, ObjectNode};
pub use lm::{
    build_layout, numeric_jacobian, optimize, residual_offsets, select_winners, windowed_solve,
    IterationStat, Layout, SolveParams, SolveReport, Termination,
};
pub use residual::{eval_edge, symmetric_object_pose, total_cost, GraphError, ResidualBuf};

use crate::scalar::Real;

fn to_f64_vec<T: Real>(values: &[T]) -> Vec<f64> {
    values.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}

/// Graph snapshot for debugging: nodes, edges and per-edge costs.
pub fn export_snapshot<T: Real>(
    state: &GraphState<T>,
    edges: &[Edge<T>],
    report: Option<&SolveReport>,
) -> serde_json::Value {
    let cameras: Vec<_> = state
        .cameras
        .iter()
        .map(|(id, pose)| {
            json!({
                "id": id,
                "fixed": state.is_fixed(&NodeKey::Camera(*id)),
                "translation": to_f64_vec(pose.translation.as_slice()),
                "rotation_col_major": to_f64_vec(pose.rotation.matrix().as_slice()),
            })
        })
        .collect();
    let objects: Vec<_> = state
        .objects
        .iter()
        .map(|(id, node)| {
            let mut value = json!({
                "id": id,
                "fixed": state.is_fixed(&NodeKey::Object(*id)),
                "position": to_f64_vec(node.position().as_slice()),
            });
            match node {
                ObjectNode::Asymmetric { pose } => {
                    value["kind"] = "asymmetric".into();
                    value["rotation_col_major"] =
                        json!(to_f64_vec(pose.rotation.matrix().as_slice()));
                }
                ObjectNode::Discrete { angles, .. } => {
                    value["kind"] = "discrete".into();
                    value["axis_world"] =
                        json!(to_f64_vec(node.axis_world().unwrap().as_slice()));
                    value["angles"] = json!(to_f64_vec(angles));
                }
                ObjectNode::Continuous { .. } => {
                    value["kind"] = "continuous".into();
                    value["axis_world"] =
                        json!(to_f64_vec(node.axis_world().unwrap().as_slice()));
                }
            }
            value
        })
        .collect();
    let edge_list: Vec<_> = edges
        .iter()
        .map(|e| {
            let (r, winner) = eval_edge(e, state, None);
            json!({
                "kind": e.kind_name(),
                "nodes": format!("{:?}", e.nodes()),
                "dim": e.dim(),
                "components": e.component_count(),
                "winner": winner,
                "cost": r.squared_norm().to_f64().unwrap_or(f64::NAN),
            })
        })
        .collect();
    json!({
        "cameras": cameras,
        "objects": objects,
        "edges": edge_list,
        "total_cost": total_cost(edges, state).to_f64().unwrap_or(f64::NAN),
        "report": report.map(|r| json!({
            "initial_cost": r.initial_cost,
            "final_cost": r.final_cost,
            "termination": r.termination,
            "iterations": r.iterations.len(),
        })),
    })
}
