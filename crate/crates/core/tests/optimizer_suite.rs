//! Optimizer behavior: residual oracles, LM dynamics, gauge and symmetry
//! invariances, and the windowed-solve contracts.

use nalgebra::{DVector, Vector3, Vector6};
use symslam_core::association::ObjectParams;
use symslam_core::liegroup::{Pose, Rotation, SphericalAxis};
use symslam_core::optimizer::{
    build_layout, eval_edge, numeric_jacobian, optimize, residual_offsets, select_winners,
    total_cost, windowed_solve, Edge, GraphState, NodeKey, ObjectNode, SolveParams, Termination,
};
use symslam_core::scalar::wrap_to_circle;
use symslam_core::sim::{look_at, perturb_pose, HypothesisNoise};
use symslam_core::testutil::{random_pose, random_rotation, rng};

fn tight_params() -> SolveParams {
    SolveParams {
        max_iterations: 200,
        rel_cost_tol: 1e-14,
        grad_tol: 1e-12,
        ..SolveParams::default()
    }
}

/// Cameras on a ring looking at the origin.
fn camera_ring(count: usize, radius: f64) -> Vec<Pose<f64>> {
    (0..count)
        .map(|i| {
            let angle = std::f64::consts::TAU * i as f64 / count as f64;
            look_at(
                &Vector3::new(radius * angle.cos(), radius * angle.sin(), 1.0),
                &Vector3::zeros(),
            )
        })
        .collect()
}

#[test]
fn asym_residual_is_zero_at_the_consistent_state() {
    let mut seeded = rng(1);
    let camera = random_pose(&mut seeded);
    let object = random_pose(&mut seeded);
    let hyp = camera.inverse().compose(&object);

    let mut state = GraphState::new();
    state.cameras.insert(0, camera);
    state.objects.insert(1, ObjectNode::Asymmetric { pose: object });
    let edge = Edge::AsymObject {
        frame: 0,
        object: 1,
        hypotheses: vec![hyp],
        weight_t: 1.0,
        weight_r: 1.0,
    };
    let (r, winner) = eval_edge(&edge, &state, None);
    assert!(r.squared_norm() < 1e-24);
    assert_eq!(winner, Some(0));
}

#[test]
fn asym_winner_switches_when_object_moves() {
    let camera = Pose::identity();
    let hyp_a = Pose::from_translation(Vector3::new(0.0, 0.0, 2.0));
    let hyp_b = Pose::from_translation(Vector3::new(1.0, 0.0, 2.0));

    let mut state = GraphState::new();
    state.cameras.insert(0, camera);
    state.objects.insert(1, ObjectNode::Asymmetric { pose: hyp_a });
    let edge = Edge::AsymObject {
        frame: 0,
        object: 1,
        hypotheses: vec![hyp_a, hyp_b],
        weight_t: 1.0,
        weight_r: 1.0,
    };
    assert_eq!(eval_edge(&edge, &state, None).1, Some(0));
    state.objects.insert(1, ObjectNode::Asymmetric { pose: hyp_b });
    assert_eq!(eval_edge(&edge, &state, None).1, Some(1));
}

#[test]
fn asym_residual_matches_exhaustive_minimum() {
    let mut seeded = rng(5);
    for _ in 0..100 {
        let camera = random_pose(&mut seeded);
        let object = random_pose(&mut seeded);
        let hypotheses: Vec<Pose<f64>> = (0..8).map(|_| random_pose(&mut seeded)).collect();
        let (wt, wr) = (1.7, 0.6);

        let mut state = GraphState::new();
        state.cameras.insert(0, camera);
        state.objects.insert(1, ObjectNode::Asymmetric { pose: object });
        let edge = Edge::AsymObject {
            frame: 0,
            object: 1,
            hypotheses: hypotheses.clone(),
            weight_t: wt,
            weight_r: wr,
        };
        let (r, winner) = eval_edge(&edge, &state, None);

        // brute force over hypotheses with an independent error expression
        let mut best = f64::MAX;
        let mut best_j = usize::MAX;
        for (j, h) in hypotheses.iter().enumerate() {
            let xi = h.compose(&object.inverse()).compose(&camera).log();
            let cost = wt * wt * xi.fixed_rows::<3>(0).norm_squared()
                + wr * wr * xi.fixed_rows::<3>(3).norm_squared();
            if cost < best {
                best = cost;
                best_j = j;
            }
        }
        assert_eq!(winner, Some(best_j));
        assert!((r.squared_norm() - best).abs() < 1e-12);
    }
}

fn discrete_node(position: Vector3<f64>, angles: Vec<f64>) -> ObjectNode<f64> {
    ObjectNode::from_object_params(&ObjectParams::Discrete {
        position_w: position,
        axis_w: SphericalAxis::from_vector(&Vector3::z()),
        angles,
    })
}

#[test]
fn disc_residual_is_zero_for_both_angles_of_a_noiseless_two_fold_object() {
    let yaw = 0.6;
    let position = Vector3::new(0.2, -0.1, 0.4);
    let object_rot = |theta: f64| Rotation::from_axis_angle(&Vector3::z(), theta);
    let cameras = camera_ring(4, 3.0);

    let mut state = GraphState::new();
    for (i, c) in cameras.iter().enumerate() {
        state.cameras.insert(i, *c);
    }
    state.objects.insert(1, discrete_node(position, vec![yaw, yaw + std::f64::consts::PI]));

    for (i, camera) in cameras.iter().enumerate() {
        for (angle_index, theta) in [yaw, yaw + std::f64::consts::PI].iter().enumerate() {
            let object_pose = Pose::new(object_rot(*theta), position);
            let hyp = camera.inverse().compose(&object_pose);
            let edge = Edge::DiscObject {
                frame: i,
                object: 1,
                angle_index,
                hypotheses: vec![hyp],
                weight_t: 1.0,
                weight_r: 1.0,
            };
            let (r, _) = eval_edge(&edge, &state, None);
            assert!(
                r.squared_norm() < 1e-20,
                "camera {i}, angle {angle_index}: {}",
                r.squared_norm()
            );
        }
    }
}

#[test]
fn disc_angle_absorbs_the_rotational_z_residual() {
    // camera at the identity so the residual's rotational part is expressed
    // along the world axes; the symmetry axis is z
    let camera = Pose::identity();
    let position = Vector3::new(0.0, 0.0, 3.0);
    let true_theta = 1.1;
    let object_pose = Pose::new(Rotation::from_axis_angle(&Vector3::z(), true_theta), position);
    let hyp = camera.inverse().compose(&object_pose);

    let make_state = |theta: f64| {
        let mut state = GraphState::new();
        state.cameras.insert(0, camera);
        state.objects.insert(1, discrete_node(position, vec![theta]));
        state
    };
    let edge = Edge::DiscObject {
        frame: 0,
        object: 1,
        angle_index: 0,
        hypotheses: vec![hyp],
        weight_t: 1.0,
        weight_r: 1.0,
    };

    let start = true_theta + 0.3;
    let (r0, _) = eval_edge(&edge, &make_state(start), None);
    let rz = r0.as_slice()[5];
    assert!(rz.abs() > 0.25, "probe needs a visible angle error: {rz}");
    // one of the two orientations of the 1-D step removes the component
    let best_after = [start + rz, start - rz]
        .iter()
        .map(|&theta| eval_edge(&edge, &make_state(theta), None).0.as_slice()[5].abs())
        .fold(f64::MAX, f64::min);
    assert!(best_after < 1e-9, "angle step did not absorb the residual: {best_after}");
}

#[test]
fn disc_with_single_angle_reduces_to_asym() {
    let mut seeded = rng(9);
    for _ in 0..50 {
        let camera = random_pose(&mut seeded);
        let theta = rand::Rng::random_range(&mut seeded, 0.0..std::f64::consts::TAU);
        let position = Vector3::new(0.3, 1.0, -0.2);
        let object_pose = Pose::new(Rotation::from_axis_angle(&Vector3::z(), theta), position);
        let hypotheses: Vec<Pose<f64>> =
            (0..5).map(|_| random_pose(&mut seeded)).collect();

        let mut state = GraphState::new();
        state.cameras.insert(0, camera);
        state.objects.insert(1, discrete_node(position, vec![theta]));
        let disc = Edge::DiscObject {
            frame: 0,
            object: 1,
            angle_index: 0,
            hypotheses: hypotheses.clone(),
            weight_t: 1.0,
            weight_r: 1.0,
        };
        let (r_disc, w_disc) = eval_edge(&disc, &state, None);

        let mut state_asym = GraphState::new();
        state_asym.cameras.insert(0, camera);
        state_asym.objects.insert(1, ObjectNode::Asymmetric { pose: object_pose });
        let asym = Edge::AsymObject {
            frame: 0,
            object: 1,
            hypotheses,
            weight_t: 1.0,
            weight_r: 1.0,
        };
        let (r_asym, w_asym) = eval_edge(&asym, &state_asym, None);

        assert_eq!(w_disc, w_asym);
        for (a, b) in r_disc.as_slice().iter().zip(r_asym.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn cts_residual_is_zero_at_the_perfect_state() {
    let camera = look_at(&Vector3::new(2.0, 1.0, 1.5), &Vector3::zeros());
    let position = Vector3::new(0.1, -0.3, 0.2);
    let axis_world = Vector3::new(0.1, 0.2, 0.97).normalize();

    let t_co = camera.rotation.inverse().rotate(&(position - camera.translation));
    let axis_co = camera.rotation.inverse().rotate(&axis_world);

    let mut state = GraphState::new();
    state.cameras.insert(0, camera);
    state.objects.insert(
        1,
        ObjectNode::from_object_params(&ObjectParams::Continuous {
            position_w: position,
            axis_w: SphericalAxis::from_vector(&axis_world),
        }),
    );
    let edge = Edge::CtsObject {
        frame: 0,
        object: 1,
        translations: vec![t_co],
        axis_co: Some(axis_co),
        gamma: 1.0,
        weight_t: 1.0,
        weight_ax: 1.0,
    };
    let (r, _) = eval_edge(&edge, &state, None);
    assert!(r.squared_norm() < 1e-20, "{}", r.squared_norm());
}

#[test]
fn cts_stacked_norm_matches_scalar_oracle() {
    let mut seeded = rng(13);
    for _ in 0..100 {
        let camera = random_pose(&mut seeded);
        let position = Vector3::new(0.5, 0.2, 0.3);
        let axis_world = Vector3::new(0.3, -0.1, 0.94).normalize();
        let gamma = [0.5, 1.0, 2.0][rand::Rng::random_range(&mut seeded, 0..3)];
        let translations: Vec<Vector3<f64>> =
            (0..6).map(|_| random_pose(&mut seeded).translation).collect();
        let axis_co = random_rotation(&mut seeded).rotate(&Vector3::z());

        let mut state = GraphState::new();
        state.cameras.insert(0, camera);
        state.objects.insert(
            1,
            ObjectNode::from_object_params(&ObjectParams::Continuous {
                position_w: position,
                axis_w: SphericalAxis::from_vector(&axis_world),
            }),
        );
        let edge = Edge::CtsObject {
            frame: 0,
            object: 1,
            translations: translations.clone(),
            axis_co: Some(axis_co),
            gamma,
            weight_t: 1.0,
            weight_ax: 1.0,
        };
        let (r, winner) = eval_edge(&edge, &state, None);

        // independent scalar route: e_trans² + γ·e_axis²
        let expected_obj = camera.rotation.inverse().rotate(&(position - camera.translation));
        let e_trans = translations
            .iter()
            .map(|t| (t - expected_obj).norm())
            .fold(f64::MAX, f64::min);
        let node = &state.objects[&1];
        let state_axis = node.axis_world().unwrap();
        let mut measured = camera.rotation.rotate(&axis_co);
        if measured.dot(&state_axis) < 0.0 {
            measured = -measured;
        }
        let (anchor, phi, psi) = match node {
            ObjectNode::Continuous { anchor, phi, psi, .. } => (anchor, *phi, *psi),
            _ => unreachable!(),
        };
        let chart = SphericalAxis::from_vector(&anchor.inverse().rotate(&measured));
        let e_axis = ((chart.phi - phi).powi(2)
            + symslam_core::scalar::wrap_to_signed(chart.psi - psi).powi(2))
        .sqrt();
        let expected = e_trans * e_trans + gamma * e_axis * e_axis;
        assert!(
            (r.squared_norm() - expected).abs() < 1e-12,
            "stacked {} vs scalar {}",
            r.squared_norm(),
            expected
        );
        assert!(winner.is_some());
    }
}

#[test]
fn cts_residual_ignores_rotations_about_the_symmetry_axis() {
    // rotating every hypothesis about the body symmetry axis leaves the
    // translation set and the extracted axis untouched
    let mut seeded = rng(17);
    let camera = look_at(&Vector3::new(2.5, -1.0, 1.2), &Vector3::zeros());
    let object_pose = Pose::new(
        Rotation::from_axis_angle(&Vector3::z(), 0.8),
        Vector3::new(0.1, 0.2, 0.0),
    );
    let axis_body = Vector3::z();
    let true_rel = camera.inverse().compose(&object_pose);

    let base: Vec<Pose<f64>> = (0..10)
        .map(|_| {
            symslam_core::sim::symmetric_pose(
                &true_rel,
                &axis_body,
                rand::Rng::random_range(&mut seeded, 0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let spun: Vec<Pose<f64>> = base
        .iter()
        .map(|p| {
            symslam_core::sim::symmetric_pose(
                p,
                &axis_body,
                rand::Rng::random_range(&mut seeded, 0.0..std::f64::consts::TAU),
            )
        })
        .collect();

    for (a, b) in base.iter().zip(&spun) {
        assert!((a.translation - b.translation).norm() < 1e-15);
        let axis_a = a.rotation.rotate(&axis_body);
        let axis_b = b.rotation.rotate(&axis_body);
        assert!((axis_a - axis_b).norm() < 1e-15);
    }
}

#[test]
fn odometry_residual_is_zero_for_exact_measurements() {
    let mut seeded = rng(21);
    let a = random_pose(&mut seeded);
    let b = random_pose(&mut seeded);
    let mut state = GraphState::new();
    state.cameras.insert(0, a);
    state.cameras.insert(1, b);
    let edge = Edge::Odometry {
        from: 0,
        to: 1,
        measurement: a.inverse().compose(&b),
        weight_t: 2.0,
        weight_r: 3.0,
    };
    let (r, _) = eval_edge(&edge, &state, None);
    assert!(r.squared_norm() < 1e-22);

    let identity_edge = Edge::Odometry {
        from: 0,
        to: 1,
        measurement: Pose::identity(),
        weight_t: 1.0,
        weight_r: 1.0,
    };
    let mut same = GraphState::new();
    same.cameras.insert(0, a);
    same.cameras.insert(1, a);
    let (r, _) = eval_edge(&identity_edge, &same, None);
    assert!(r.squared_norm() < 1e-22);
}

/// Noisy odometry ring used by several solver tests.
fn noisy_chain(seed: u64, nodes: usize) -> (GraphState<f64>, Vec<Edge<f64>>, Vec<Pose<f64>>) {
    let mut stream = rng(seed);
    let truth = camera_ring(nodes, 2.0);
    let noise = HypothesisNoise { sigma_t: 0.05, sigma_r: 2f64.to_radians() };

    let mut edges = Vec::new();
    for i in 1..nodes {
        let rel = truth[i - 1].inverse().compose(&truth[i]);
        edges.push(Edge::Odometry {
            from: i - 1,
            to: i,
            measurement: perturb_pose(&rel, noise, &mut stream),
            weight_t: 1.0,
            weight_r: 1.0,
        });
    }
    // loop closure to make the solution well determined
    let rel = truth[nodes - 1].inverse().compose(&truth[0]);
    edges.push(Edge::Odometry {
        from: nodes - 1,
        to: 0,
        measurement: perturb_pose(&rel, noise, &mut stream),
        weight_t: 1.0,
        weight_r: 1.0,
    });

    let mut state = GraphState::new();
    for (i, pose) in truth.iter().enumerate() {
        // odometry propagation as the initial guess
        let guess = if i == 0 {
            *pose
        } else {
            let prev = state.cameras[&(i - 1)];
            if let Edge::Odometry { measurement, .. } = &edges[i - 1] {
                prev.compose(measurement)
            } else {
                unreachable!()
            }
        };
        state.cameras.insert(i, guess);
    }
    state.fixed.insert(NodeKey::Camera(0));
    (state, edges, truth)
}

#[test]
fn noiseless_asym_object_is_recovered_exactly() {
    let camera = look_at(&Vector3::new(2.0, 0.0, 1.0), &Vector3::zeros());
    let object = Pose::new(
        Rotation::from_axis_angle(&Vector3::new(0.3, 0.5, 0.8).normalize(), 0.7),
        Vector3::new(0.1, -0.2, 0.3),
    );
    let hyp = camera.inverse().compose(&object);

    let mut state = GraphState::new();
    state.cameras.insert(0, camera);
    state.fixed.insert(NodeKey::Camera(0));
    // perturbed initial object state
    state.objects.insert(
        1,
        ObjectNode::Asymmetric {
            pose: object.boxplus(&Vector6::from_row_slice(&[0.2, -0.1, 0.15, 0.1, -0.05, 0.2])),
        },
    );
    let edges = vec![Edge::AsymObject {
        frame: 0,
        object: 1,
        hypotheses: vec![hyp],
        weight_t: 1.0,
        weight_r: 1.0,
    }];
    let report = optimize(&mut state, &edges, &tight_params()).unwrap();
    assert!(report.final_cost < 1e-18, "final cost {}", report.final_cost);
}

#[test]
fn lm_matches_an_independent_gauss_newton_solver() {
    let (mut state, edges, _) = noisy_chain(31, 10);
    let mut gn_state = state.clone();

    let report = optimize(&mut state, &edges, &tight_params()).unwrap();
    assert!(report.final_cost.is_finite());

    // independent Gauss-Newton: own finite differencing, undamped normal
    // equations, fixed iteration count
    let layout = build_layout(&gn_state);
    let (offsets, rdim) = residual_offsets(&edges);
    let stack = |s: &GraphState<f64>| -> DVector<f64> {
        let mut v = DVector::zeros(rdim);
        for (e, edge) in edges.iter().enumerate() {
            let (r, _) = eval_edge(edge, s, None);
            for (i, &x) in r.as_slice().iter().enumerate() {
                v[offsets[e] + i] = x;
            }
        }
        v
    };
    for _ in 0..60 {
        let r0 = stack(&gn_state);
        let h = 1e-7;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(rdim, layout.total);
        for (key, col, dim) in &layout.blocks {
            for k in 0..*dim {
                let mut delta = vec![0.0; *dim];
                delta[k] = h;
                let saved = gn_state.snapshot(key);
                gn_state.apply_increment(key, &delta);
                let r1 = stack(&gn_state);
                gn_state.restore(key, saved);
                for i in 0..rdim {
                    jac[(i, col + k)] = (r1[i] - r0[i]) / h;
                }
            }
        }
        let hess = jac.transpose() * &jac;
        let grad = jac.transpose() * &r0;
        let Some(chol) = hess.cholesky() else { break };
        let step = chol.solve(&(-&grad));
        if step.norm() < 1e-12 {
            break;
        }
        for (key, col, dim) in &layout.blocks {
            let slice: Vec<f64> = (0..*dim).map(|k| step[col + k]).collect();
            gn_state.apply_increment(key, &slice);
        }
    }

    for (id, pose) in &state.cameras {
        let gn = &gn_state.cameras[id];
        let dt = (pose.translation - gn.translation).norm();
        let dr = (pose.rotation.matrix() - gn.rotation.matrix()).norm();
        assert!(dt < 1e-6 && dr < 1e-6, "camera {id}: dt={dt}, dr={dr}");
    }
}

#[test]
fn accepted_costs_decrease_monotonically_with_sane_gain_ratios() {
    let (mut state, edges, _) = noisy_chain(37, 12);
    let report = optimize(&mut state, &edges, &SolveParams::default()).unwrap();
    let accepted: Vec<_> = report.iterations.iter().filter(|i| i.accepted).collect();
    assert!(accepted.len() >= 3, "solver made too few accepted steps");
    let mut last = report.initial_cost;
    for it in &accepted {
        assert!(it.cost <= last * (1.0 + 1e-12), "cost rose: {} -> {}", last, it.cost);
        last = it.cost;
        assert!(
            it.gain_ratio > 0.0 && it.gain_ratio < 2.5,
            "gain ratio out of range: {}",
            it.gain_ratio
        );
    }
}

#[test]
fn gauge_transforming_the_problem_transforms_the_solution() {
    let (mut state_a, edges, _) = noisy_chain(43, 8);
    let report_a = optimize(&mut state_a, &edges, &tight_params()).unwrap();
    assert!(matches!(report_a.termination, Termination::Converged | Termination::GradientSmall));

    let g = Pose::new(
        Rotation::from_axis_angle(&Vector3::new(0.2, -0.4, 0.89).normalize(), 0.9),
        Vector3::new(5.0, -2.0, 1.0),
    );
    let (mut state_b, _, _) = noisy_chain(43, 8);
    for pose in state_b.cameras.values_mut() {
        *pose = g.compose(pose);
    }
    let report_b = optimize(&mut state_b, &edges, &tight_params()).unwrap();
    assert!(matches!(report_b.termination, Termination::Converged | Termination::GradientSmall));

    for (id, pose_a) in &state_a.cameras {
        let expected = g.compose(pose_a);
        let got = &state_b.cameras[id];
        let dt = (expected.translation - got.translation).norm();
        let dr = (expected.rotation.matrix() - got.rotation.matrix()).norm();
        assert!(dt < 1e-6 && dr < 1e-6, "camera {id}: dt={dt}, dr={dr}");
    }
}

/// Continuous object observed from a ring of fixed cameras: noisy
/// translations, exact rotations.
fn continuous_case(
    spin_seed: Option<u64>,
) -> (GraphState<f64>, Vec<Edge<f64>>, Vector3<f64>, Vector3<f64>) {
    let mut stream = rng(51);
    let position = Vector3::new(0.2, -0.1, 0.4);
    let axis_world = Vector3::z();
    let object_pose = Pose::new(Rotation::from_axis_angle(&Vector3::z(), 0.4), position);
    let cameras = camera_ring(12, 3.0);

    let mut state = GraphState::new();
    let mut edges = Vec::new();
    let mut spin_stream = spin_seed.map(rng);
    for (i, camera) in cameras.iter().enumerate() {
        state.cameras.insert(i, *camera);
        state.fixed.insert(NodeKey::Camera(i));
        let true_rel = camera.inverse().compose(&object_pose);
        let translations: Vec<Vector3<f64>> = (0..8)
            .map(|_| {
                let base = symslam_core::sim::symmetric_pose(
                    &true_rel,
                    &Vector3::z(),
                    rand::Rng::random_range(&mut stream, 0.0..std::f64::consts::TAU),
                );
                let spun = match &mut spin_stream {
                    Some(s) => symslam_core::sim::symmetric_pose(
                        &base,
                        &Vector3::z(),
                        rand::Rng::random_range(s, 0.0..std::f64::consts::TAU),
                    ),
                    None => base,
                };
                // translation noise only; rotations stay exact
                spun.translation
                    + Vector3::new(
                        rand::Rng::random_range(&mut stream, -0.02..0.02),
                        rand::Rng::random_range(&mut stream, -0.02..0.02),
                        rand::Rng::random_range(&mut stream, -0.02..0.02),
                    )
            })
            .collect();
        let axis_co = camera.rotation.inverse().rotate(&axis_world);
        edges.push(Edge::CtsObject {
            frame: i,
            object: 1,
            translations,
            axis_co: Some(axis_co),
            gamma: 1.0,
            weight_t: 1.0,
            weight_ax: 1.0,
        });
    }
    // perturbed initial object state
    state.objects.insert(
        1,
        ObjectNode::from_object_params(&ObjectParams::Continuous {
            position_w: position + Vector3::new(0.3, -0.2, 0.1),
            axis_w: SphericalAxis::from_vector(
                &(axis_world + Vector3::new(0.2, 0.1, 0.0)).normalize(),
            ),
        }),
    );
    (state, edges, position, axis_world)
}

#[test]
fn continuous_solution_is_blind_to_symmetric_angles() {
    // the same detections spun about the symmetry axis by arbitrary angles
    // produce the exact same converged shared parameters
    let (mut state_a, edges_a, _, _) = continuous_case(None);
    let (mut state_b, edges_b, _, _) = continuous_case(Some(1234));

    let report_a = optimize(&mut state_a, &edges_a, &tight_params()).unwrap();
    let report_b = optimize(&mut state_b, &edges_b, &tight_params()).unwrap();
    assert!(report_a.final_cost.is_finite() && report_b.final_cost.is_finite());

    let obj_a = &state_a.objects[&1];
    let obj_b = &state_b.objects[&1];
    assert!((obj_a.position() - obj_b.position()).norm() < 1e-6);
    let (ax_a, ax_b) = (obj_a.axis_world().unwrap(), obj_b.axis_world().unwrap());
    let axis_diff = (ax_a - ax_b).norm().min((ax_a + ax_b).norm());
    assert!(axis_diff < 1e-6, "axis changed under symmetric spin: {axis_diff}");
}

#[test]
fn continuous_recovers_position_and_axis() {
    let (mut state, edges, position, axis_world) = continuous_case(None);
    optimize(&mut state, &edges, &tight_params()).unwrap();
    let obj = &state.objects[&1];
    assert!((obj.position() - position).norm() < 0.02, "{:?}", obj.position());
    let axis = obj.axis_world().unwrap();
    let axis_err = (axis - axis_world).norm().min((axis + axis_world).norm());
    assert!(axis_err < 0.01, "axis error {axis_err}");
}

#[test]
fn discrete_reduces_to_continuous_on_noiseless_input() {
    let position = Vector3::new(0.1, 0.3, 0.5);
    let axis_world = Vector3::z();
    let yaw = 0.8;
    let cameras = camera_ring(10, 3.0);
    let thetas = [yaw, yaw + std::f64::consts::PI];

    // discrete formulation
    let mut disc_state = GraphState::new();
    let mut disc_edges = Vec::new();
    // continuous formulation of the same observations
    let mut cts_state = GraphState::new();
    let mut cts_edges = Vec::new();

    for (i, camera) in cameras.iter().enumerate() {
        disc_state.cameras.insert(i, *camera);
        disc_state.fixed.insert(NodeKey::Camera(i));
        cts_state.cameras.insert(i, *camera);
        cts_state.fixed.insert(NodeKey::Camera(i));
        let mut translations = Vec::new();
        for (angle_index, theta) in thetas.iter().enumerate() {
            let object_pose =
                Pose::new(Rotation::from_axis_angle(&Vector3::z(), *theta), position);
            let hyp = camera.inverse().compose(&object_pose);
            translations.push(hyp.translation);
            disc_edges.push(Edge::DiscObject {
                frame: i,
                object: 1,
                angle_index,
                hypotheses: vec![hyp],
                weight_t: 1.0,
                weight_r: 1.0,
            });
        }
        cts_edges.push(Edge::CtsObject {
            frame: i,
            object: 1,
            translations,
            axis_co: Some(camera.rotation.inverse().rotate(&axis_world)),
            gamma: 1.0,
            weight_t: 1.0,
            weight_ax: 1.0,
        });
    }

    let start_position = position + Vector3::new(0.2, -0.15, 0.1);
    let start_axis = (axis_world + Vector3::new(0.15, -0.1, 0.0)).normalize();
    disc_state.objects.insert(
        1,
        ObjectNode::from_object_params(&ObjectParams::Discrete {
            position_w: start_position,
            axis_w: SphericalAxis::from_vector(&start_axis),
            angles: vec![yaw + 0.1, yaw + std::f64::consts::PI - 0.07],
        }),
    );
    cts_state.objects.insert(
        1,
        ObjectNode::from_object_params(&ObjectParams::Continuous {
            position_w: start_position,
            axis_w: SphericalAxis::from_vector(&start_axis),
        }),
    );

    optimize(&mut disc_state, &disc_edges, &tight_params()).unwrap();
    optimize(&mut cts_state, &cts_edges, &tight_params()).unwrap();

    let (disc_obj, cts_obj) = (&disc_state.objects[&1], &cts_state.objects[&1]);
    assert!(
        (disc_obj.position() - cts_obj.position()).norm() < 1e-6,
        "positions diverge: {:?} vs {:?}",
        disc_obj.position(),
        cts_obj.position()
    );
    let (ax_d, ax_c) = (disc_obj.axis_world().unwrap(), cts_obj.axis_world().unwrap());
    let axis_diff = (ax_d - ax_c).norm().min((ax_d + ax_c).norm());
    assert!(axis_diff < 1e-6, "axes diverge: {axis_diff}");
    // and the discrete angles land on the truth
    if let ObjectNode::Discrete { angles, .. } = disc_obj {
        for (angle, theta) in angles.iter().zip(&thetas) {
            assert!(
                symslam_core::scalar::circular_distance(*angle, wrap_to_circle(*theta)) < 1e-6
            );
        }
    }
}

#[test]
fn window_covering_the_whole_graph_equals_full_optimize() {
    let (mut full, edges, _) = noisy_chain(61, 8);
    let mut windowed = full.clone();
    optimize(&mut full, &edges, &tight_params()).unwrap();
    windowed_solve(&mut windowed, &edges, 8, &tight_params()).unwrap();
    for (id, pose) in &full.cameras {
        let win = &windowed.cameras[id];
        assert!((pose.translation - win.translation).norm() < 1e-12);
        assert!((pose.rotation.matrix() - win.rotation.matrix()).norm() < 1e-12);
    }
}

#[test]
fn fully_fixed_window_is_a_no_op() {
    let (mut state, edges, _) = noisy_chain(67, 5);
    let ids: Vec<usize> = state.cameras.keys().copied().collect();
    for id in ids {
        state.fixed.insert(NodeKey::Camera(id));
    }
    let before = state.clone();
    let report = windowed_solve(&mut state, &edges, 1, &tight_params()).unwrap();
    assert_eq!(report.termination, Termination::NothingFree);
    for (id, pose) in &before.cameras {
        assert_eq!(pose.translation, state.cameras[id].translation);
    }
}

#[test]
fn numeric_jacobian_matches_directional_differences() {
    let (mut state, mut edges, _) = noisy_chain(71, 6);
    // add an object so every residual kind participates
    let object_pose = Pose::new(
        Rotation::from_axis_angle(&Vector3::z(), 0.3),
        Vector3::new(0.1, 0.0, 0.2),
    );
    state
        .objects
        .insert(1, ObjectNode::Asymmetric { pose: object_pose });
    let camera = state.cameras[&2];
    edges.push(Edge::AsymObject {
        frame: 2,
        object: 1,
        hypotheses: vec![camera.inverse().compose(&object_pose.boxplus(
            &Vector6::from_row_slice(&[0.05, 0.02, -0.04, 0.03, 0.01, -0.02]),
        ))],
        weight_t: 1.0,
        weight_r: 1.0,
    });

    let layout = build_layout(&state);
    let winners = select_winners(&edges, &state);
    let jacobian = numeric_jacobian(&mut state, &edges, &winners, &layout, 1e-6);

    let (offsets, rdim) = residual_offsets(&edges);
    let stack = |s: &GraphState<f64>| -> DVector<f64> {
        let mut v = DVector::zeros(rdim);
        for (e, edge) in edges.iter().enumerate() {
            let (r, _) = eval_edge(edge, s, winners[e]);
            for (i, &x) in r.as_slice().iter().enumerate() {
                v[offsets[e] + i] = x;
            }
        }
        v
    };

    let mut seeded = rng(5);
    for _ in 0..10 {
        let direction: DVector<f64> = DVector::from_fn(layout.total, |_, _| {
            rand::Rng::random_range(&mut seeded, -1.0..1.0)
        });
        let direction = &direction / direction.norm();
        let h = 1e-5;
        let mut plus = state.clone();
        let mut minus = state.clone();
        for (key, col, dim) in &layout.blocks {
            let d_plus: Vec<f64> = (0..*dim).map(|k| h * direction[col + k]).collect();
            let d_minus: Vec<f64> = (0..*dim).map(|k| -h * direction[col + k]).collect();
            plus.apply_increment(key, &d_plus);
            minus.apply_increment(key, &d_minus);
        }
        let numeric = (stack(&plus) - stack(&minus)) / (2.0 * h);
        let analytic = &jacobian * &direction;
        let err = (&numeric - &analytic).norm() / analytic.norm().max(1e-12);
        assert!(err < 1e-4, "directional derivative mismatch: {err}");
    }
    let _ = total_cost(&edges, &state);
}
