//! Seeded random samples shared by tests and verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{mat_exp, Covec3, Mat3, Vec3};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn vec3(rng: &mut SampleRng) -> Vec3 {
    Vec3::new(
        uniform(rng, -1.0, 1.0),
        uniform(rng, -1.0, 1.0),
        uniform(rng, -1.0, 1.0),
    )
}

pub fn covec3(rng: &mut SampleRng) -> Covec3 {
    vec3(rng).transpose()
}

pub fn mat3(rng: &mut SampleRng) -> Mat3 {
    Mat3([vec3(rng).0, vec3(rng).0, vec3(rng).0])
}

pub fn sl3_algebra(rng: &mut SampleRng) -> Mat3 {
    let m = mat3(rng);
    m - Mat3::identity() * (m.trace() / 3.0)
}

/// A well-conditioned random element of SL₃ (exponential of a small sl₃ element).
pub fn sl3_group(rng: &mut SampleRng) -> Mat3 {
    mat_exp(&sl3_algebra(rng), 0.8)
}
