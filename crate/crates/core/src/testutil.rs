//! Deterministic sampling helpers shared by unit, integration and acceptance
//! tests.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::liegroup::{AxisAngle, Pose, Rotation};

/// Seeded RNG with a stable stream across runs.
pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Rotation with uniform random axis and angle uniform in `(-π, π)`.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation<f64> {
    let axis = random_unit_vector(rng);
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    AxisAngle::new(axis * angle).exp()
}

pub fn random_pose(rng: &mut ChaCha8Rng) -> Pose<f64> {
    Pose::new(
        random_rotation(rng),
        Vector3::from_fn(|_, _| rng.random_range(-5.0..5.0)),
    )
}
