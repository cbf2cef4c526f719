//! Simulator-driven categorizer checks: classification accuracy, axis
//! recovery, occlusion behavior and scenario-level invariants.

use nalgebra::Vector3;
use symslam_core::categorizer::{categorize, CategorizerParams, SymmetryParams, SymmetryType};
use symslam_core::liegroup::Pose;
use symslam_core::scalar::circular_distance;
use symslam_core::sim::{
    generate_scenario, occlusion_filter, sample_hypotheses, HypothesisNoise, HypothesisSet,
    NoiseModel, ObjectSpec, PathSpec, Scenario, ScenarioConfig, SymmetrySpec, TrajectorySpec,
};
use symslam_core::testutil::{random_pose, rng};

const DEFAULT_NOISE: HypothesisNoise =
    HypothesisNoise { sigma_t: 0.03, sigma_r: 2.0 * std::f64::consts::PI / 180.0 };

fn sampled_set(
    symmetry: SymmetrySpec,
    noise: HypothesisNoise,
    seed: u64,
) -> (HypothesisSet<f64>, Pose<f64>, Vector3<f64>) {
    let mut rng = rng(seed);
    let truth = random_pose(&mut rng);
    let axis = Vector3::z();
    let hypotheses = sample_hypotheses(&truth, symmetry, &axis, noise, 30, &mut rng);
    (
        HypothesisSet { object_id_truth: 1, class_label: "obj".into(), hypotheses },
        truth,
        axis,
    )
}

#[test]
fn discrete_sets_classify_discrete_with_pi_separated_clusters() {
    let params = CategorizerParams::default();
    let mut correct = 0;
    for seed in 0..1000 {
        let (set, _, _) = sampled_set(SymmetrySpec::Discrete { fold: 2 }, DEFAULT_NOISE, seed);
        let det = categorize(&set, &params);
        if let SymmetryParams::Discrete { angle_clusters, .. } = &det.params {
            if angle_clusters.len() == 2 {
                let gap = circular_distance(
                    angle_clusters[0].representative,
                    angle_clusters[1].representative,
                );
                if (gap - std::f64::consts::PI).abs() < 15f64.to_radians() {
                    correct += 1;
                }
            }
        }
    }
    assert!(correct >= 950, "discrete(2) classification rate: {correct}/1000");
}

#[test]
fn continuous_sets_classify_continuous() {
    let params = CategorizerParams::default();
    let mut correct = 0;
    for seed in 0..1000 {
        let (set, _, _) = sampled_set(SymmetrySpec::Continuous, DEFAULT_NOISE, 5000 + seed);
        if categorize(&set, &params).symmetry_type() == SymmetryType::Continuous {
            correct += 1;
        }
    }
    assert!(correct >= 950, "continuous classification rate: {correct}/1000");
}

#[test]
fn asymmetric_sets_classify_asymmetric() {
    let params = CategorizerParams::default();
    let mut correct = 0;
    for seed in 0..1000 {
        let (set, _, _) = sampled_set(SymmetrySpec::Asymmetric, DEFAULT_NOISE, 9000 + seed);
        if categorize(&set, &params).symmetry_type() == SymmetryType::Asymmetric {
            correct += 1;
        }
    }
    assert!(correct >= 950, "asymmetric classification rate: {correct}/1000");
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

fn axis_error_for_sigma(sigma_r_deg: f64, seeds: u64) -> f64 {
    let params = CategorizerParams::default();
    let noise = HypothesisNoise { sigma_t: 0.03, sigma_r: sigma_r_deg.to_radians() };
    let mut errors = Vec::new();
    for seed in 0..seeds {
        let (set, truth, axis_body) =
            sampled_set(SymmetrySpec::Discrete { fold: 2 }, noise, 40_000 + seed * 97);
        let det = categorize(&set, &params);
        if let Some(axis_co) = det.axis_co() {
            let expected = truth.rotation.rotate(&axis_body);
            let dot = axis_co.dot(&expected).abs().min(1.0);
            errors.push(dot.acos());
        }
    }
    assert!(errors.len() as f64 >= seeds as f64 * 0.9, "too few symmetric classifications");
    median(errors)
}

#[test]
fn axis_recovered_within_one_degree_at_default_noise() {
    let err = axis_error_for_sigma(2.0, 200);
    assert!(err < 1f64.to_radians(), "median axis error {:.3} deg", err.to_degrees());
}

#[test]
fn axis_error_shrinks_with_noise() {
    let sigmas = [4.0, 2.0, 1.0, 0.5];
    let errors: Vec<f64> = sigmas.iter().map(|&s| axis_error_for_sigma(s, 200)).collect();
    for pair in errors.windows(2) {
        assert!(
            pair[1] <= pair[0] * 1.05,
            "axis error not monotone over sigmas {sigmas:?}: {errors:?}"
        );
    }
}

fn orbit_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        hypotheses: 30,
        trajectory: TrajectorySpec {
            path: PathSpec::Orbit { center: [0.0, 0.0, 0.4], radius: 3.0, height: 1.2 },
            frames: 72,
            featureless_arcs: vec![],
        },
        objects: vec![ObjectSpec {
            id: 1,
            class_label: "table".into(),
            position: [0.0, 0.0, 0.4],
            rpy_deg: [0.0, 0.0, 30.0],
            symmetry: SymmetrySpec::Discrete { fold: 2 },
            axis_body: [0.0, 0.0, 1.0],
        }],
        noise: NoiseModel::default(),
        occlusion_arcs: vec![],
        occlusion_position_bias: 0.4,
        occlusion_yaw_bias_deg: 40.0,
        categorizer: None,
        fov_deg: 90.0,
        max_range: 12.0,
    }
}

#[test]
fn orbit_of_72_frames_has_one_detection_of_30_hypotheses_each() {
    let scenario: Scenario<f64> = generate_scenario(&orbit_config(7)).unwrap();
    assert_eq!(scenario.frames.len(), 72);
    for frame in &scenario.frames {
        assert_eq!(frame.detections.len(), 1, "frame {}", frame.frame_id);
        assert_eq!(frame.detections[0].hypotheses.len(), 30);
    }
}

#[test]
fn zero_noise_asymmetric_hypotheses_equal_true_relative_pose() {
    let mut config = orbit_config(3);
    config.objects[0].symmetry = SymmetrySpec::Asymmetric;
    config.noise = NoiseModel {
        det_sigma_t: 0.0,
        det_sigma_r_deg: 0.0,
        odom_sigma_t: 0.0,
        odom_sigma_r_deg: 0.0,
        featureless_inflation: 1.0,
    };
    let scenario: Scenario<f64> = generate_scenario(&config).unwrap();
    let object = &scenario.objects[0];
    for frame in &scenario.frames {
        let truth = frame.true_camera_pose.inverse().compose(&object.true_pose);
        for h in &frame.detections[0].hypotheses {
            assert!((h.translation - truth.translation).norm() < 1e-12);
            assert!((h.rotation.matrix() - truth.rotation.matrix()).norm() < 1e-12);
        }
    }
}

#[test]
fn same_seed_gives_bit_identical_scenarios() {
    let a: Scenario<f64> = generate_scenario(&orbit_config(7)).unwrap();
    let b: Scenario<f64> = generate_scenario(&orbit_config(7)).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    let c: Scenario<f64> = generate_scenario(&orbit_config(8)).unwrap();
    assert_ne!(a.to_jsonl(), c.to_jsonl());
}

#[test]
fn scenario_jsonl_roundtrip() {
    let a: Scenario<f64> = generate_scenario(&orbit_config(11)).unwrap();
    let text = a.to_jsonl();
    let b = Scenario::<f64>::from_jsonl(&text).unwrap();
    assert_eq!(text, b.to_jsonl());
}

#[test]
fn noiseless_odometry_composes_to_final_camera_pose() {
    let mut config = orbit_config(5);
    config.noise.odom_sigma_t = 0.0;
    config.noise.odom_sigma_r_deg = 0.0;
    let scenario: Scenario<f64> = generate_scenario(&config).unwrap();
    let mut pose = scenario.frames[0].true_camera_pose;
    for frame in &scenario.frames[1..] {
        pose = pose.compose(&frame.odometry.as_ref().unwrap().relative);
    }
    let last = scenario.frames.last().unwrap().true_camera_pose;
    assert!((pose.translation - last.translation).norm() < 1e-9);
    assert!((pose.rotation.matrix() - last.rotation.matrix()).norm() < 1e-9);
}

#[test]
fn occluded_discrete_views_categorize_asymmetric() {
    let mut config = orbit_config(21);
    config.occlusion_arcs = vec![[10, 25]];
    let scenario: Scenario<f64> = generate_scenario(&config).unwrap();
    let params = CategorizerParams::default();
    let mut asym_in_arc = 0;
    let mut frames_in_arc = 0;
    for frame in &scenario.frames {
        let det = categorize(&frame.detections[0], &params);
        if (10..=25).contains(&frame.frame_id) {
            frames_in_arc += 1;
            if det.symmetry_type() == SymmetryType::Asymmetric {
                asym_in_arc += 1;
            }
        }
    }
    assert_eq!(asym_in_arc, frames_in_arc, "occluded views must look unimodal");
}

#[test]
fn occlusion_filter_is_identity_without_arcs() {
    let config = orbit_config(23);
    let scenario: Scenario<f64> = generate_scenario(&config).unwrap();
    let mut stream = rng(99);
    let frame = scenario.frames[5].clone();
    let before = serde_json::to_string(&frame).unwrap();
    let after = occlusion_filter(frame, &scenario.objects, &config, &mut stream);
    assert_eq!(before, serde_json::to_string(&after).unwrap());
}

#[test]
fn full_orbit_occlusion_never_categorizes_discrete() {
    let mut config = orbit_config(29);
    config.occlusion_arcs = vec![[0, 71]];
    let scenario: Scenario<f64> = generate_scenario(&config).unwrap();
    let params = CategorizerParams::default();
    for frame in &scenario.frames {
        let det = categorize(&frame.detections[0], &params);
        assert_ne!(
            det.symmetry_type(),
            SymmetryType::Discrete,
            "frame {} leaked the discrete structure",
            frame.frame_id
        );
    }
}
