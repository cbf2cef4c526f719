//! Hypothesis and noise sampling. All randomness is drawn in f64 through a
//! seeded stream and cast into the scalar type, so f32 and f64 scenarios
//! consume identical random sequences.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::SymmetrySpec;
use crate::liegroup::{AxisAngle, Pose, Rotation};
use crate::scalar::{cast, Real};

/// Per-hypothesis perturbation magnitudes, radians/meters.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisNoise {
    pub sigma_t: f64,
    pub sigma_r: f64,
}

fn normal3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| {
        let n: f64 = StandardNormal.sample(rng);
        n * sigma
    })
}

/// Perturb a pose by Gaussian rotation (right-multiplied, radians) and
/// additive Gaussian translation (meters).
pub fn perturb_pose<T: Real>(pose: &Pose<T>, noise: HypothesisNoise, rng: &mut ChaCha8Rng) -> Pose<T> {
    let rot_noise = normal3(rng, noise.sigma_r);
    let trans_noise = normal3(rng, noise.sigma_t);
    let delta = AxisAngle::new(Vector3::new(
        cast::<T>(rot_noise.x),
        cast::<T>(rot_noise.y),
        cast::<T>(rot_noise.z),
    ))
    .exp();
    Pose::new(
        pose.rotation.compose(&delta),
        pose.translation
            + Vector3::new(cast(trans_noise.x), cast(trans_noise.y), cast(trans_noise.z)),
    )
}

/// Rotate `pose` about the body-frame `axis` by `angle` (a symmetry-
/// equivalent pose: the translation is untouched).
pub fn symmetric_pose<T: Real>(pose: &Pose<T>, axis: &Vector3<T>, angle: T) -> Pose<T> {
    let spin = Rotation::from_axis_angle(axis, angle);
    Pose::new(pose.rotation.compose(&spin), pose.translation)
}

/// Draw `n` pose hypotheses for one detection.
///
/// * asymmetric: perturbations of the true relative pose;
/// * discrete(k): perturbations of one of the k symmetry-equivalent poses,
///   mode chosen uniformly per hypothesis;
/// * continuous: the true pose spun by an angle uniform in `[0, 2π)` about
///   the body axis, then perturbed.
pub fn sample_hypotheses<T: Real>(
    true_relative: &Pose<T>,
    symmetry: SymmetrySpec,
    axis_body: &Vector3<T>,
    noise: HypothesisNoise,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Pose<T>> {
    assert!(n >= 2, "need at least 2 hypotheses");
    (0..n)
        .map(|_| {
            let mode_pose = match symmetry {
                SymmetrySpec::Asymmetric => *true_relative,
                SymmetrySpec::Discrete { fold } => {
                    let j = rng.random_range(0..fold);
                    let angle = cast::<T>(2.0 * std::f64::consts::PI * j as f64 / fold as f64);
                    symmetric_pose(true_relative, axis_body, angle)
                }
                SymmetrySpec::Continuous => {
                    let angle = cast::<T>(rng.random_range(0.0..std::f64::consts::TAU));
                    symmetric_pose(true_relative, axis_body, angle)
                }
            };
            perturb_pose(&mode_pose, noise, rng)
        })
        .collect()
}

/// Hypotheses for a partially occluded view of a discrete object: the set
/// collapses to a single symmetry mode picked deterministically from the
/// viewing direction, so the detection looks asymmetric. The estimate is
/// biased the way a partial view is: the position shifts toward the camera
/// by `position_bias` meters (the visible part's centroid) and the apparent
/// orientation sits `yaw_bias` radians off the true mode.
pub fn sample_occluded_discrete<T: Real>(
    true_relative: &Pose<T>,
    fold: u32,
    axis_body: &Vector3<T>,
    bearing: f64,
    position_bias: f64,
    yaw_bias: f64,
    noise: HypothesisNoise,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Pose<T>> {
    let turn = (bearing.rem_euclid(std::f64::consts::TAU)) / std::f64::consts::TAU;
    let mode = ((turn * fold as f64).floor() as u32).min(fold - 1);
    let angle = cast::<T>(2.0 * std::f64::consts::PI * mode as f64 / fold as f64 + yaw_bias);
    let mut locked = symmetric_pose(true_relative, axis_body, angle);
    let range = locked.translation.norm();
    if range > cast(1e-9) {
        let shift = T::one() - cast::<T>(position_bias).min(range * cast(0.5)) / range;
        locked.translation *= shift;
    }
    (0..n).map(|_| perturb_pose(&locked, noise, rng)).collect()
}
