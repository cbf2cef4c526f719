//! Levenberg-Marquardt over the factor graph with finite-difference
//! Jacobians and per-iteration max-mixture winner re-selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::graph::{default_pole_band, Edge, GraphState, NodeKey};
use super::residual::{eval_edge, GraphError};
use crate::scalar::{cast, Real};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveParams {
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Central finite-difference step on local coordinates.
    pub fd_step: f64,
    pub max_iterations: usize,
    /// Terminate when the relative cost change of an accepted step drops
    /// below this.
    pub rel_cost_tol: f64,
    /// Terminate when the gradient infinity norm drops below this.
    pub grad_tol: f64,
    /// Axis chart re-anchoring band around the poles, radians.
    pub pole_band: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            lambda_init: 1e-4,
            lambda_up: 10.0,
            lambda_down: 10.0,
            fd_step: 1e-6,
            max_iterations: 100,
            rel_cost_tol: 1e-9,
            grad_tol: 1e-8,
            pole_band: 5f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    GradientSmall,
    MaxIterations,
    LambdaExhausted,
    NothingFree,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationStat {
    pub iteration: usize,
    pub cost: f64,
    pub lambda: f64,
    pub winner_switches: usize,
    pub accepted: bool,
    pub gain_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub initial_cost: f64,
    pub final_cost: f64,
    pub termination: Termination,
    pub iterations: Vec<IterationStat>,
}

impl SolveReport {
    /// Convergence report: `iteration,cost,lambda,winner_switches,accepted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,cost,lambda,winner_switches,accepted\n");
        for it in &self.iterations {
            out.push_str(&format!(
                "{},{:.17e},{:.3e},{},{}\n",
                it.iteration, it.cost, it.lambda, it.winner_switches, it.accepted
            ));
        }
        out
    }

    pub fn total_winner_switches(&self) -> usize {
        self.iterations.iter().map(|i| i.winner_switches).sum()
    }
}

/// Free-block layout of the state vector: `(node, column offset, dimension)`
/// in deterministic node order.
pub struct Layout {
    pub blocks: Vec<(NodeKey, usize, usize)>,
    pub total: usize,
}

pub fn build_layout<T: Real>(state: &GraphState<T>) -> Layout {
    let mut blocks = Vec::new();
    let mut offset = 0;
    for (&id, _) in &state.cameras {
        let key = NodeKey::Camera(id);
        if !state.is_fixed(&key) {
            blocks.push((key, offset, 6));
            offset += 6;
        }
    }
    for (&id, node) in &state.objects {
        let key = NodeKey::Object(id);
        if !state.is_fixed(&key) {
            let dim = node.dim();
            blocks.push((key, offset, dim));
            offset += dim;
        }
    }
    Layout { blocks, total: offset }
}

fn validate<T: Real>(state: &GraphState<T>, edges: &[Edge<T>]) -> Result<(), GraphError> {
    let any_free_camera = state
        .cameras
        .keys()
        .any(|&id| !state.is_fixed(&NodeKey::Camera(id)));
    let any_fixed_camera = state
        .cameras
        .keys()
        .any(|&id| state.is_fixed(&NodeKey::Camera(id)));
    if any_free_camera && !any_fixed_camera {
        return Err(GraphError::NoFixedCamera);
    }

    let mut touched: std::collections::BTreeSet<NodeKey> = Default::default();
    for (idx, edge) in edges.iter().enumerate() {
        for node in edge.nodes() {
            let exists = match node {
                NodeKey::Camera(id) => state.cameras.contains_key(&id),
                NodeKey::Object(id) => state.objects.contains_key(&id),
            };
            if !exists {
                return Err(GraphError::MissingNode { edge: idx, node: format!("{node:?}") });
            }
            touched.insert(node);
        }
        if let Edge::DiscObject { object, angle_index, .. } = edge {
            if let Some(super::graph::ObjectNode::Discrete { angles, .. }) =
                state.objects.get(object)
            {
                if *angle_index >= angles.len() {
                    return Err(GraphError::BadAngleIndex {
                        edge: idx,
                        object: *object,
                        index: *angle_index,
                        len: angles.len(),
                    });
                }
            }
        }
    }
    for (&id, _) in &state.objects {
        let key = NodeKey::Object(id);
        if !state.is_fixed(&key) && !touched.contains(&key) {
            return Err(GraphError::UnreachableNode(format!("{key:?}")));
        }
    }
    for (&id, _) in &state.cameras {
        let key = NodeKey::Camera(id);
        if !state.is_fixed(&key) && !touched.contains(&key) {
            return Err(GraphError::UnreachableNode(format!("{key:?}")));
        }
    }
    Ok(())
}

/// Stack residuals with pinned winners; returns the vector and whether all
/// entries are finite.
fn assemble_residual<T: Real>(
    edges: &[Edge<T>],
    state: &GraphState<T>,
    winners: &[Option<usize>],
    offsets: &[usize],
    out: &mut DVector<T>,
) -> bool {
    let mut finite = true;
    for (e, edge) in edges.iter().enumerate() {
        let (r, _) = eval_edge(edge, state, winners[e]);
        for (i, &v) in r.as_slice().iter().enumerate() {
            if !v.is_finite() {
                finite = false;
            }
            out[offsets[e] + i] = v;
        }
    }
    finite
}

/// Residual offsets of each edge in the stacked residual vector.
pub fn residual_offsets<T: Real>(edges: &[Edge<T>]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(edges.len());
    let mut acc = 0;
    for e in edges {
        offsets.push(acc);
        acc += e.dim();
    }
    (offsets, acc)
}

/// Current max-mixture winner of every edge.
pub fn select_winners<T: Real>(edges: &[Edge<T>], state: &GraphState<T>) -> Vec<Option<usize>> {
    edges.iter().map(|e| eval_edge(e, state, None).1).collect()
}

/// Central finite-difference Jacobian of the stacked residual with respect
/// to the free blocks, on the smooth piece selected by `winners`.
pub fn numeric_jacobian<T: Real>(
    state: &mut GraphState<T>,
    edges: &[Edge<T>],
    winners: &[Option<usize>],
    layout: &Layout,
    step: T,
) -> DMatrix<T> {
    let (offsets, residual_dim) = residual_offsets(edges);
    let mut node_edges: std::collections::BTreeMap<NodeKey, Vec<usize>> = Default::default();
    for (e, edge) in edges.iter().enumerate() {
        for n in edge.nodes() {
            node_edges.entry(n).or_default().push(e);
        }
    }
    let mut jacobian = DMatrix::<T>::zeros(residual_dim, layout.total);
    for (key, col_offset, dim) in &layout.blocks {
        let Some(edge_ids) = node_edges.get(key) else { continue };
        for k in 0..*dim {
            let mut delta = vec![T::zero(); *dim];
            let mut probe = |sign: T, state: &mut GraphState<T>| -> Vec<(usize, Vec<T>)> {
                delta[k] = sign * step;
                let saved = state.snapshot(key);
                state.apply_increment(key, &delta);
                let rows = edge_ids
                    .iter()
                    .map(|&e| (e, eval_edge(&edges[e], state, winners[e]).0.as_slice().to_vec()))
                    .collect();
                state.restore(key, saved);
                rows
            };
            let plus = probe(T::one(), state);
            let minus = probe(-T::one(), state);
            let inv_2h = T::one() / (step + step);
            for ((e, rp), (_, rm)) in plus.iter().zip(minus.iter()) {
                for i in 0..rp.len() {
                    jacobian[(offsets[*e] + i, col_offset + k)] = (rp[i] - rm[i]) * inv_2h;
                }
            }
        }
    }
    jacobian
}

/// Levenberg-Marquardt minimization of the stacked squared residual.
///
/// Jacobians are central finite differences over the local
/// parameterizations; max-mixture winners are re-selected once per
/// iteration and pinned during differencing and trial evaluation, so every
/// iteration works on one smooth piece of the cost.
pub fn optimize<T: Real>(
    state: &mut GraphState<T>,
    edges: &[Edge<T>],
    params: &SolveParams,
) -> Result<SolveReport, GraphError> {
    validate(state, edges)?;

    let layout = build_layout(state);
    let (offsets, residual_dim) = residual_offsets(edges);

    let mut winners = select_winners(edges, state);
    let mut residual = DVector::zeros(residual_dim);
    if !assemble_residual(edges, state, &winners, &offsets, &mut residual) {
        return Err(first_non_finite(edges, state, &winners, &offsets));
    }
    let mut cost = residual.norm_squared();
    let initial_cost = cost.to_f64().unwrap_or(f64::NAN);

    let mut report = SolveReport {
        initial_cost,
        final_cost: initial_cost,
        termination: Termination::MaxIterations,
        iterations: Vec::new(),
    };

    if layout.total == 0 || edges.is_empty() {
        report.termination = Termination::NothingFree;
        return Ok(report);
    }

    let mut lambda = cast::<T>(params.lambda_init);
    let step = cast::<T>(params.fd_step);
    let pole_band = if params.pole_band > 0.0 { cast(params.pole_band) } else { default_pole_band() };

    for iteration in 0..params.max_iterations {
        let jacobian = numeric_jacobian(state, edges, &winners, &layout, step);
        let gradient = jacobian.transpose() * &residual;
        let grad_inf = gradient.iter().fold(T::zero(), |m, &g| m.max(g.abs()));
        if grad_inf < cast(params.grad_tol) {
            report.termination = Termination::GradientSmall;
            break;
        }
        let hessian = jacobian.transpose() * &jacobian;

        // damped steps until one is accepted
        let mut accepted = false;
        let mut switches = 0usize;
        loop {
            let mut damped = hessian.clone();
            for i in 0..layout.total {
                let d = hessian[(i, i)].max(cast(1e-12));
                damped[(i, i)] = hessian[(i, i)] + lambda * d;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= cast(params.lambda_up);
                if lambda > cast(1e14) {
                    report.termination = Termination::LambdaExhausted;
                    break;
                }
                continue;
            };
            let delta = chol.solve(&(-&gradient));

            let mut trial = state.clone();
            for (key, offset, dim) in &layout.blocks {
                let slice: Vec<T> = (0..*dim).map(|k| delta[offset + k]).collect();
                trial.apply_increment(key, &slice);
            }
            let mut trial_residual = DVector::zeros(residual_dim);
            if !assemble_residual(edges, &trial, &winners, &offsets, &mut trial_residual) {
                return Err(first_non_finite(edges, &trial, &winners, &offsets));
            }
            let trial_cost = trial_residual.norm_squared();

            // gain ratio against the linear model ‖r + Jδ‖²
            let predicted = -(cast::<T>(2.0) * gradient.dot(&delta)
                + (&hessian * &delta).dot(&delta));
            let gain = if predicted > T::zero() {
                ((cost - trial_cost) / predicted).to_f64().unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };

            if trial_cost < cost {
                *state = trial;
                state.wrap_and_reanchor(pole_band);
                let new_winners = select_winners(edges, state);
                switches = new_winners
                    .iter()
                    .zip(&winners)
                    .filter(|(a, b)| a != b)
                    .count();
                winners = new_winners;
                if !assemble_residual(edges, state, &winners, &offsets, &mut residual) {
                    return Err(first_non_finite(edges, state, &winners, &offsets));
                }
                let new_cost = residual.norm_squared();
                lambda = (lambda / cast(params.lambda_down)).max(cast(1e-12));
                report.iterations.push(IterationStat {
                    iteration,
                    cost: new_cost.to_f64().unwrap_or(f64::NAN),
                    lambda: lambda.to_f64().unwrap_or(f64::NAN),
                    winner_switches: switches,
                    accepted: true,
                    gain_ratio: gain,
                });
                let rel_change = ((cost - new_cost) / cost.max(cast(1e-300)))
                    .to_f64()
                    .unwrap_or(0.0);
                cost = new_cost;
                accepted = true;
                if rel_change.abs() < params.rel_cost_tol {
                    report.termination = Termination::Converged;
                }
                break;
            }

            lambda *= cast(params.lambda_up);
            report.iterations.push(IterationStat {
                iteration,
                cost: cost.to_f64().unwrap_or(f64::NAN),
                lambda: lambda.to_f64().unwrap_or(f64::NAN),
                winner_switches: 0,
                accepted: false,
                gain_ratio: gain,
            });
            if lambda > cast(1e14) {
                report.termination = Termination::LambdaExhausted;
                break;
            }
        }

        let _ = switches;
        if !accepted {
            break;
        }
        if report.termination == Termination::Converged {
            break;
        }
    }

    report.final_cost = cost.to_f64().unwrap_or(f64::NAN);
    Ok(report)
}

fn first_non_finite<T: Real>(
    edges: &[Edge<T>],
    state: &GraphState<T>,
    winners: &[Option<usize>],
    _offsets: &[usize],
) -> GraphError {
    for (e, edge) in edges.iter().enumerate() {
        let (r, _) = eval_edge(edge, state, winners[e]);
        if r.as_slice().iter().any(|v| !v.is_finite()) {
            return GraphError::NonFiniteResidual { edge: e, kind: edge.kind_name() };
        }
    }
    GraphError::NonFiniteResidual { edge: 0, kind: "unknown" }
}

/// Optimize the last `window_size` camera nodes and every object they
/// observe; older cameras (and objects seen only by them) are fixed.
///
/// Edges touching at least one free node are kept, so historical
/// observations of an in-window object still constrain it.
pub fn windowed_solve<T: Real>(
    state: &mut GraphState<T>,
    edges: &[Edge<T>],
    window_size: usize,
    params: &SolveParams,
) -> Result<SolveReport, GraphError> {
    let camera_ids: Vec<usize> = state.cameras.keys().copied().collect();
    let cutoff = camera_ids.len().saturating_sub(window_size);
    for &id in &camera_ids[..cutoff] {
        state.fixed.insert(NodeKey::Camera(id));
    }
    if !camera_ids.is_empty()
        && !camera_ids.iter().any(|id| state.is_fixed(&NodeKey::Camera(*id)))
    {
        state.fixed.insert(NodeKey::Camera(camera_ids[0]));
    }

    // objects observed from inside the window stay free
    let mut observed: std::collections::BTreeSet<u32> = Default::default();
    for edge in edges {
        let [camera, object] = edge.nodes();
        if let (NodeKey::Camera(_), NodeKey::Object(id)) = (camera, object) {
            if !state.is_fixed(&camera) {
                observed.insert(id);
            }
        }
    }
    let object_ids: Vec<u32> = state.objects.keys().copied().collect();
    for id in object_ids {
        if !observed.contains(&id) {
            state.fixed.insert(NodeKey::Object(id));
        }
    }

    let kept: Vec<Edge<T>> = edges
        .iter()
        .filter(|e| e.nodes().iter().any(|n| !state.is_fixed(n)))
        .cloned()
        .collect();
    optimize(state, &kept, params)
}
